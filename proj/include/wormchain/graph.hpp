#pragma once

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <istream>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "edge_subset.hpp"

namespace wormchain {

/// Raised for malformed edge lists and for graphs violating the simple/connected contract.
class GraphError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct Edge {
    Vertex u;
    Vertex v;
    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Immutable simple connected graph on vertices 0..n-1.
///
/// Edges are stored as (u, v) with u < v in lexicographic order, so the edge id
/// order restricted to the edges incident to any vertex is the order of the
/// other endpoint. Adjacency is kept in CSR form with neighbours ascending.
class Graph {
  public:
    Graph(std::size_t vertex_count, std::vector<Edge> edges) : n_(vertex_count) {
        if (n_ < 2) throw GraphError("graph needs at least 2 vertices");
        if (n_ > std::numeric_limits<Vertex>::max()) throw GraphError("too many vertices");
        for (Edge& e : edges) {
            if (e.u >= n_ || e.v >= n_)
                throw GraphError("edge (" + std::to_string(e.u) + "," + std::to_string(e.v) + ") out of range");
            if (e.u == e.v) throw GraphError("self-loop at vertex " + std::to_string(e.u));
            if (e.u > e.v) std::swap(e.u, e.v);
        }
        std::sort(edges.begin(), edges.end());
        if (auto dup = std::adjacent_find(edges.begin(), edges.end()); dup != edges.end())
            throw GraphError("parallel edge (" + std::to_string(dup->u) + "," + std::to_string(dup->v) + ")");
        edges_ = std::move(edges);

        offsets_.assign(n_ + 1, 0);
        for (const Edge& e : edges_) {
            ++offsets_[e.u + 1];
            ++offsets_[e.v + 1];
        }
        std::partial_sum(offsets_.begin(), offsets_.end(), offsets_.begin());
        neighbors_.resize(2 * edges_.size());
        incident_.resize(2 * edges_.size());
        std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
        // Iterating edges in lexicographic order fills every row in ascending neighbour order.
        for (std::size_t pass = 0; pass < 2; ++pass) {
            for (EdgeId id = 0; id < edges_.size(); ++id) {
                const Edge& e = edges_[id];
                // first pass: rows of the larger endpoint get the smaller neighbours
                if (pass == 0) {
                    neighbors_[fill[e.v]] = e.u;
                    incident_[fill[e.v]++] = id;
                } else {
                    neighbors_[fill[e.u]] = e.v;
                    incident_[fill[e.u]++] = id;
                }
            }
        }
        max_degree_ = 0;
        for (Vertex v = 0; v < n_; ++v) max_degree_ = std::max(max_degree_, degree(v));
        if (!is_connected()) throw GraphError("graph is not connected");
    }

    [[nodiscard]] std::size_t vertex_count() const noexcept { return n_; }
    [[nodiscard]] std::size_t edge_count() const noexcept { return edges_.size(); }
    [[nodiscard]] std::size_t max_degree() const noexcept { return max_degree_; }
    [[nodiscard]] std::size_t degree(Vertex v) const noexcept { return offsets_[v + 1] - offsets_[v]; }

    [[nodiscard]] std::span<const Edge> edges() const noexcept { return edges_; }
    [[nodiscard]] const Edge& edge(EdgeId id) const noexcept { return edges_[id]; }

    [[nodiscard]] std::span<const Vertex> neighbors(Vertex v) const noexcept {
        return {neighbors_.data() + offsets_[v], degree(v)};
    }
    /// Edge ids parallel to neighbors(v).
    [[nodiscard]] std::span<const EdgeId> incident_edges(Vertex v) const noexcept {
        return {incident_.data() + offsets_[v], degree(v)};
    }

    [[nodiscard]] std::optional<EdgeId> find_edge(Vertex u, Vertex v) const noexcept {
        if (u >= n_ || v >= n_) return std::nullopt;
        auto nb = neighbors(u);
        auto it = std::lower_bound(nb.begin(), nb.end(), v);
        if (it == nb.end() || *it != v) return std::nullopt;
        return incident_edges(u)[static_cast<std::size_t>(it - nb.begin())];
    }
    [[nodiscard]] EdgeId edge_id(Vertex u, Vertex v) const {
        auto e = find_edge(u, v);
        if (!e) throw std::invalid_argument("(" + std::to_string(u) + "," + std::to_string(v) + ") is not an edge");
        return *e;
    }

    [[nodiscard]] EdgeSubset empty_subset() const { return EdgeSubset(edges_.size()); }
    [[nodiscard]] EdgeSubset full_subset() const {
        EdgeSubset s(edges_.size());
        for (EdgeId e = 0; e < edges_.size(); ++e) s.set(e);
        return s;
    }

    /// FNV-1a over the canonical "n m u v ..." token stream.
    [[nodiscard]] std::uint64_t hash() const noexcept {
        std::uint64_t h = 14695981039346656037ULL;
        auto mix = [&h](std::uint64_t value) {
            for (int i = 0; i < 8; ++i) {
                h ^= (value >> (8 * i)) & 0xFFU;
                h *= 1099511628211ULL;
            }
        };
        mix(n_);
        mix(edges_.size());
        for (const Edge& e : edges_) {
            mix(e.u);
            mix(e.v);
        }
        return h;
    }

    friend bool operator==(const Graph& a, const Graph& b) { return a.n_ == b.n_ && a.edges_ == b.edges_; }

  private:
    [[nodiscard]] bool is_connected() const {
        std::vector<char> seen(n_, 0);
        std::vector<Vertex> stack{0};
        seen[0] = 1;
        std::size_t reached = 1;
        while (!stack.empty()) {
            Vertex v = stack.back();
            stack.pop_back();
            for (Vertex w : neighbors(v))
                if (!seen[w]) {
                    seen[w] = 1;
                    ++reached;
                    stack.push_back(w);
                }
        }
        return reached == n_;
    }

    std::size_t n_;
    std::vector<Edge> edges_;
    std::vector<std::size_t> offsets_;
    std::vector<Vertex> neighbors_;
    std::vector<EdgeId> incident_;
    std::size_t max_degree_ = 0;
};

// ---------------------------------------------------------------------------
// Edge-list text format

namespace detail {

inline bool next_content_line(std::istream& in, std::string& line, std::size_t& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        return true;
    }
    return false;
}

inline std::vector<std::uint64_t> parse_uints(const std::string& line, std::size_t line_no) {
    std::vector<std::uint64_t> out;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
        std::uint64_t value = 0;
        auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
        if (ec != std::errc{} || ptr != tok.data() + tok.size())
            throw GraphError("line " + std::to_string(line_no) + ": expected a non-negative integer, got '" + tok + "'");
        out.push_back(value);
    }
    return out;
}

}  // namespace detail

/// Parses "n m" followed by m lines "u v" (0-indexed); '#' lines are comments.
inline Graph load_graph(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!detail::next_content_line(in, line, line_no)) throw GraphError("empty edge list");
    auto header = detail::parse_uints(line, line_no);
    if (header.size() != 2) throw GraphError("line " + std::to_string(line_no) + ": header must be 'n m'");
    const std::uint64_t n = header[0];
    const std::uint64_t m = header[1];
    if (n > std::numeric_limits<Vertex>::max()) throw GraphError("vertex count too large");
    std::vector<Edge> edges;
    edges.reserve(static_cast<std::size_t>(std::min<std::uint64_t>(m, 1U << 20)));
    for (std::uint64_t i = 0; i < m; ++i) {
        if (!detail::next_content_line(in, line, line_no))
            throw GraphError("expected " + std::to_string(m) + " edges, found " + std::to_string(i));
        auto uv = detail::parse_uints(line, line_no);
        if (uv.size() != 2) throw GraphError("line " + std::to_string(line_no) + ": edge must be 'u v'");
        if (uv[0] >= n || uv[1] >= n)
            throw GraphError("line " + std::to_string(line_no) + ": vertex out of range");
        edges.push_back({static_cast<Vertex>(uv[0]), static_cast<Vertex>(uv[1])});
    }
    if (detail::next_content_line(in, line, line_no))
        throw GraphError("line " + std::to_string(line_no) + ": trailing content after " + std::to_string(m) + " edges");
    return Graph(static_cast<std::size_t>(n), std::move(edges));
}

inline Graph load_graph(std::string_view text) {
    std::istringstream in{std::string(text)};
    return load_graph(in);
}

inline std::string to_edge_list(const Graph& g) {
    std::string out = std::to_string(g.vertex_count()) + " " + std::to_string(g.edge_count()) + "\n";
    for (const Edge& e : g.edges()) out += std::to_string(e.u) + " " + std::to_string(e.v) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Generators

inline Graph path_graph(std::size_t n) {
    if (n < 2) throw GraphError("path needs n >= 2");
    std::vector<Edge> e;
    for (Vertex i = 0; i + 1 < n; ++i) e.push_back({i, i + 1});
    return Graph(n, std::move(e));
}

inline Graph cycle_graph(std::size_t n) {
    if (n < 3) throw GraphError("cycle needs n >= 3");
    std::vector<Edge> e;
    for (Vertex i = 0; i < n; ++i) e.push_back({i, static_cast<Vertex>((i + 1) % n)});
    return Graph(n, std::move(e));
}

inline Graph complete_graph(std::size_t n) {
    if (n < 2) throw GraphError("complete graph needs n >= 2");
    std::vector<Edge> e;
    for (Vertex i = 0; i < n; ++i)
        for (Vertex j = i + 1; j < n; ++j) e.push_back({i, j});
    return Graph(n, std::move(e));
}

/// rows x cols grid, vertex (r, c) labelled r * cols + c.
inline Graph grid_graph(std::size_t rows, std::size_t cols) {
    if (rows < 1 || cols < 1 || rows * cols < 2) throw GraphError("grid needs at least 2 vertices");
    std::vector<Edge> e;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            auto v = static_cast<Vertex>(r * cols + c);
            if (c + 1 < cols) e.push_back({v, v + 1});
            if (r + 1 < rows) e.push_back({v, static_cast<Vertex>(v + cols)});
        }
    return Graph(rows * cols, std::move(e));
}

/// Periodic rows x cols lattice; both sides must be >= 3 to stay simple.
inline Graph torus_graph(std::size_t rows, std::size_t cols) {
    if (rows < 3 || cols < 3) throw GraphError("torus sides must be >= 3");
    std::vector<Edge> e;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            auto v = static_cast<Vertex>(r * cols + c);
            e.push_back({v, static_cast<Vertex>(r * cols + (c + 1) % cols)});
            e.push_back({v, static_cast<Vertex>(((r + 1) % rows) * cols + c)});
        }
    return Graph(rows * cols, std::move(e));
}

/// Parses generator names: k<n>, path<n>, cycle<n>, grid<r>x<c>, torus<r>x<c>.
inline Graph generate(std::string_view spec) {
    auto number = [&](std::string_view s) -> std::size_t {
        std::size_t value = 0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
        if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
            throw GraphError("bad generator spec '" + std::string(spec) + "'");
        return value;
    };
    auto two = [&](std::string_view s) -> std::pair<std::size_t, std::size_t> {
        auto x = s.find('x');
        if (x == std::string_view::npos) throw GraphError("bad generator spec '" + std::string(spec) + "'");
        return {number(s.substr(0, x)), number(s.substr(x + 1))};
    };
    if (spec.starts_with("path")) return path_graph(number(spec.substr(4)));
    if (spec.starts_with("cycle")) return cycle_graph(number(spec.substr(5)));
    if (spec.starts_with("grid")) {
        auto [r, c] = two(spec.substr(4));
        return grid_graph(r, c);
    }
    if (spec.starts_with("torus")) {
        auto [r, c] = two(spec.substr(5));
        return torus_graph(r, c);
    }
    if (spec.starts_with("k")) return complete_graph(number(spec.substr(1)));
    throw GraphError("unknown generator '" + std::string(spec) + "'");
}

// ---------------------------------------------------------------------------
// Subgraph operations

/// Odd-degree vertices of the spanning subgraph (V, A), ascending.
inline std::vector<Vertex> boundary(const Graph& g, const EdgeSubset& a) {
    std::vector<char> odd(g.vertex_count(), 0);
    for (EdgeId e : a.members()) {
        odd[g.edge(e).u] ^= 1;
        odd[g.edge(e).v] ^= 1;
    }
    std::vector<Vertex> out;
    for (Vertex v = 0; v < g.vertex_count(); ++v)
        if (odd[v]) out.push_back(v);
    return out;
}

/// BFS distances from `source` using only edges of `allowed`; unreachable vertices get SIZE_MAX.
inline std::vector<std::size_t> bfs_distances(const Graph& g, Vertex source, const EdgeSubset& allowed) {
    constexpr auto unreached = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> dist(g.vertex_count(), unreached);
    std::deque<Vertex> queue{source};
    dist[source] = 0;
    while (!queue.empty()) {
        Vertex v = queue.front();
        queue.pop_front();
        auto nb = g.neighbors(v);
        auto ids = g.incident_edges(v);
        for (std::size_t i = 0; i < nb.size(); ++i) {
            if (!allowed.contains(ids[i]) || dist[nb[i]] != unreached) continue;
            dist[nb[i]] = dist[v] + 1;
            queue.push_back(nb[i]);
        }
    }
    return dist;
}

inline std::size_t distance(const Graph& g, Vertex u, Vertex v) {
    return bfs_distances(g, u, g.full_subset())[v];
}

/// Shortest u-v path inside (V, allowed), as a vertex sequence starting at min(u, v).
/// Ties are broken towards the lexicographically smallest sequence.
inline std::vector<Vertex> shortest_path(const Graph& g, Vertex u, Vertex v, const EdgeSubset& allowed) {
    const Vertex from = std::min(u, v);
    const Vertex to = std::max(u, v);
    auto dist = bfs_distances(g, to, allowed);
    if (dist[from] == std::numeric_limits<std::size_t>::max())
        throw GraphError("vertices " + std::to_string(u) + " and " + std::to_string(v) + " are disconnected");
    std::vector<Vertex> path{from};
    Vertex cur = from;
    while (cur != to) {
        auto nb = g.neighbors(cur);
        auto ids = g.incident_edges(cur);
        for (std::size_t i = 0; i < nb.size(); ++i) {
            // neighbours ascend, so the first distance-decreasing one is lexicographically smallest
            if (allowed.contains(ids[i]) && dist[nb[i]] + 1 == dist[cur]) {
                cur = nb[i];
                break;
            }
        }
        path.push_back(cur);
    }
    return path;
}

inline std::vector<EdgeId> path_edges(const Graph& g, std::span<const Vertex> path) {
    std::vector<EdgeId> out;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) out.push_back(g.edge_id(path[i], path[i + 1]));
    return out;
}

/// Closed walk v0 -> v1 -> ... -> v(k-1) -> v0; edges[i] joins vertices[i] and vertices[(i+1) % k].
struct Cycle {
    std::vector<Vertex> vertices;
    std::vector<EdgeId> edges;
    friend bool operator==(const Cycle&, const Cycle&) = default;
};

/// Splits an even subgraph into edge-disjoint simple cycles.
///
/// Repeatedly walks from the lowest vertex with remaining degree, always taking
/// the lowest unused incident edge, until a vertex repeats; the closed part of
/// the walk becomes the next cycle. Each cycle starts at its lowest vertex and
/// heads towards the smaller of that vertex's two cycle neighbours.
inline std::vector<Cycle> decompose_even_subgraph(const Graph& g, const EdgeSubset& b) {
    if (!boundary(g, b).empty()) throw GraphError("subgraph has odd-degree vertices");
    EdgeSubset remaining = b;
    std::vector<std::size_t> deg(g.vertex_count(), 0);
    for (EdgeId e : b.members()) {
        ++deg[g.edge(e).u];
        ++deg[g.edge(e).v];
    }
    constexpr auto none = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> pos(g.vertex_count(), none);
    std::vector<Cycle> cycles;
    Vertex lowest = 0;
    while (true) {
        while (lowest < g.vertex_count() && deg[lowest] == 0) ++lowest;
        if (lowest == g.vertex_count()) break;

        std::vector<Vertex> walk{lowest};
        std::vector<EdgeId> walk_edges;
        pos[lowest] = 0;
        Vertex cur = lowest;
        std::optional<EdgeId> came_by;
        while (true) {
            auto nb = g.neighbors(cur);
            auto ids = g.incident_edges(cur);
            std::size_t pick = nb.size();
            for (std::size_t i = 0; i < nb.size(); ++i)
                if (remaining.contains(ids[i]) && ids[i] != came_by) {
                    pick = i;
                    break;
                }
            if (pick == nb.size()) throw std::logic_error("even subgraph walk got stuck");
            const Vertex next = nb[pick];
            walk_edges.push_back(ids[pick]);
            came_by = ids[pick];
            if (pos[next] != none) {
                const std::size_t start = pos[next];
                Cycle c;
                c.vertices.assign(walk.begin() + static_cast<std::ptrdiff_t>(start), walk.end());
                c.edges.assign(walk_edges.begin() + static_cast<std::ptrdiff_t>(start), walk_edges.end());
                for (EdgeId e : c.edges) {
                    remaining.reset(e);
                    --deg[g.edge(e).u];
                    --deg[g.edge(e).v];
                }
                // rotate to the lowest vertex, then orient towards its smaller neighbour
                const std::size_t k = c.vertices.size();
                const auto low = static_cast<std::size_t>(
                    std::min_element(c.vertices.begin(), c.vertices.end()) - c.vertices.begin());
                std::rotate(c.vertices.begin(), c.vertices.begin() + static_cast<std::ptrdiff_t>(low), c.vertices.end());
                std::rotate(c.edges.begin(), c.edges.begin() + static_cast<std::ptrdiff_t>(low), c.edges.end());
                if (c.vertices[k - 1] < c.vertices[1]) {
                    std::reverse(c.vertices.begin() + 1, c.vertices.end());
                    std::reverse(c.edges.begin(), c.edges.end());
                }
                cycles.push_back(std::move(c));
                break;
            }
            pos[next] = walk.size();
            walk.push_back(next);
            cur = next;
        }
        for (Vertex v : walk) pos[v] = none;
    }
    return cycles;
}

}  // namespace wormchain
