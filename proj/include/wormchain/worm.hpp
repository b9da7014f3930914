#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <concepts>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "edge_subset.hpp"
#include "graph.hpp"
#include "rng.hpp"

namespace wormchain {

/// Temperature of the chain. x = tanh(beta) is the canonical parameter.
class ChainParams {
  public:
    static ChainParams from_x(double x) {
        if (!(x > 0.0 && x < 1.0)) throw std::domain_error("x must lie in (0,1), got " + std::to_string(x));
        return ChainParams(x, std::atanh(x));
    }
    static ChainParams from_beta(double beta) {
        if (!(beta > 0.0) || !std::isfinite(beta))
            throw std::domain_error("beta must be positive and finite, got " + std::to_string(beta));
        const double x = std::tanh(beta);
        if (!(x < 1.0)) throw std::domain_error("beta too large: tanh(beta) rounds to 1");
        return ChainParams(x, beta);
    }

    [[nodiscard]] double x() const noexcept { return x_; }
    [[nodiscard]] double beta() const noexcept { return beta_; }

  private:
    ChainParams(double x, double beta) : x_(x), beta_(beta) {}
    double x_;
    double beta_;
};

class Sampler;

/// Edge subset A of the worm configuration space W = C0 u C2, with a cached boundary.
class WormState {
  public:
    explicit WormState(const Graph& g) : edges_(g.edge_count()) {}

    /// Throws std::invalid_argument if `edges` has more than two odd vertices.
    static WormState from_edges(const Graph& g, EdgeSubset edges) {
        if (edges.universe_size() != g.edge_count()) throw std::invalid_argument("edge subset size mismatch");
        auto odd = boundary(g, edges);
        if (odd.size() > 2)
            throw std::invalid_argument("subset has " + std::to_string(odd.size()) + " odd vertices; not a worm state");
        WormState s(g);
        s.edge_count_ = edges.count();
        s.edges_ = std::move(edges);
        s.defect_count_ = static_cast<std::uint8_t>(odd.size());
        std::copy(odd.begin(), odd.end(), s.defects_.begin());
        return s;
    }

    [[nodiscard]] const EdgeSubset& edges() const noexcept { return edges_; }
    /// Odd vertices, ascending; size 0 or 2.
    [[nodiscard]] std::span<const Vertex> defects() const noexcept { return {defects_.data(), defect_count_}; }
    [[nodiscard]] bool in_c0() const noexcept { return defect_count_ == 0; }
    [[nodiscard]] std::size_t edge_count() const noexcept { return edge_count_; }
    [[nodiscard]] bool is_defect(Vertex v) const noexcept {
        return defect_count_ == 2 && (defects_[0] == v || defects_[1] == v);
    }

    /// Flips edge e = uv and updates the boundary by toggling the parity of u and v.
    /// Throws std::logic_error if the result would leave W.
    void flip(Vertex u, Vertex v, EdgeId e) {
        std::array<Vertex, 4> d{};
        std::size_t k = 0;
        for (std::size_t i = 0; i < defect_count_; ++i) d[k++] = defects_[i];
        for (Vertex w : {u, v}) {
            auto end = d.begin() + static_cast<std::ptrdiff_t>(k);
            auto it = std::find(d.begin(), end, w);
            if (it != end) {
                *it = d[--k];
            } else {
                d[k++] = w;
            }
        }
        if (k > 2) throw std::logic_error("flip would leave the worm configuration space");
        if (k == 2 && d[0] > d[1]) std::swap(d[0], d[1]);
        defects_ = {d[0], d[1]};
        defect_count_ = static_cast<std::uint8_t>(k);
        if (edges_.flip(e)) {
            ++edge_count_;
        } else {
            --edge_count_;
        }
    }

    /// Recomputes the boundary and edge count from scratch and compares with the cache.
    [[nodiscard]] bool consistent_with(const Graph& g) const {
        auto odd = boundary(g, edges_);
        return edges_.count() == edge_count_ && odd.size() == defect_count_ &&
               std::equal(odd.begin(), odd.end(), defects_.begin());
    }

    friend bool operator==(const WormState& a, const WormState& b) { return a.edges_ == b.edges_; }

  private:
    friend class Sampler;

    EdgeSubset edges_;
    std::array<Vertex, 2> defects_{};
    std::uint8_t defect_count_ = 0;
    std::size_t edge_count_ = 0;
};

struct Move {
    Vertex u;
    Vertex v;
    EdgeId edge;
};

/// Draws (u, v): u uniform on V in C0 or uniform on the two defects in C2,
/// then v uniform among the neighbours of u.
inline Move propose(const Graph& g, const WormState& s, Engine& rng) {
    const Vertex u = s.in_c0() ? static_cast<Vertex>(uniform_index(rng, g.vertex_count()))
                               : s.defects()[uniform_index(rng, 2)];
    const std::size_t slot = uniform_index(rng, g.degree(u));
    return {u, g.neighbors(u)[slot], g.incident_edges(u)[slot]};
}

namespace detail {

inline double acceptance_of(const Graph& g, const WormState& s, const Move& mv, double x) noexcept {
    const bool adding = !s.edges().contains(mv.edge);
    const double x_pm = adding ? x : 1.0 / x;
    // C2 -> C2 with u a defect: the moving end is u and it lands on v
    if (s.is_defect(mv.u) && !s.is_defect(mv.v)) {
        const double ratio = static_cast<double>(g.degree(mv.u)) / static_cast<double>(g.degree(mv.v));
        return 0.5 * std::min(1.0, ratio * x_pm);
    }
    return 0.5 * std::min(1.0, x_pm);
}

}  // namespace detail

/// Lazy Metropolis acceptance probability a(A, A xor uv); always <= 1/2.
inline double acceptance(const Graph& g, const WormState& s, Vertex u, Vertex v, const ChainParams& p) {
    const EdgeId e = g.edge_id(u, v);
    return detail::acceptance_of(g, s, Move{u, v, e}, p.x());
}

/// One step of the chain in place. Returns true if the proposed flip was accepted.
inline bool step(const Graph& g, WormState& s, const ChainParams& p, Engine& rng) {
    const Move mv = propose(g, s, rng);
    const double a = detail::acceptance_of(g, s, mv, p.x());
    if (uniform01(rng) < a) {
        s.flip(mv.u, mv.v, mv.edge);
        return true;
    }
    return false;
}

/// Table-driven form of step() for long runs. Acceptance probabilities are precomputed as
/// integer thresholds on the top 53 bits of the acceptance draw, so given the same engine
/// state it consumes the same draws and produces the same trajectory as step().
class Sampler {
  public:
    Sampler(const Graph& g, const ChainParams& p) : graph_(&g), n_(g.vertex_count()) {
        offsets_.reserve(n_ + 1);
        offsets_.push_back(0);
        for (Vertex u = 0; u < n_; ++u) {
            auto nb = g.neighbors(u);
            auto ids = g.incident_edges(u);
            for (std::size_t k = 0; k < nb.size(); ++k) {
                const double ratio = static_cast<double>(g.degree(u)) / static_cast<double>(g.degree(nb[k]));
                slots_.push_back({nb[k], ids[k], threshold(0.5 * std::min(1.0, ratio * p.x())),
                                  threshold(0.5 * std::min(1.0, ratio * (1.0 / p.x())))});
            }
            offsets_.push_back(static_cast<std::uint32_t>(slots_.size()));
        }
        add_ = threshold(0.5 * std::min(1.0, p.x()));
        remove_ = threshold(0.5 * std::min(1.0, 1.0 / p.x()));
    }

    [[nodiscard]] const Graph& graph() const noexcept { return *graph_; }

    template <class Gen>
    bool step(WormState& s, Gen& rng) const {
        // branch-free: the C0/C2 and accept outcomes are close to coin flips
        const std::uint64_t c0 = s.defect_count_ == 0;
        const std::uint64_t c0_mask = 0 - c0;
        const auto idx = static_cast<Vertex>(uniform_index(rng, 2 + ((n_ - 2) & c0_mask)));
        const Vertex defect = s.defects_[idx & 1U];
        const Vertex other = s.defects_[(idx & 1U) ^ 1U];
        const Vertex u = defect ^ ((defect ^ idx) & static_cast<Vertex>(c0_mask));
        const Slot& sl = pick(u, rng);
        auto* words = s.edges_.words_data();
        const std::uint64_t present = (words[sl.edge >> 6] >> (sl.edge & 63)) & 1U;
        const std::uint64_t closing = (1 - c0) & static_cast<std::uint64_t>(sl.to == other);
        const std::uint64_t moving = (1 - c0) & (1 - closing);
        const std::uint64_t thresholds[2][2] = {{add_, remove_}, {sl.add_moving, sl.remove_moving}};
        const std::uint64_t accept = (rng() >> 11) < thresholds[moving][present];

        const Vertex anchor = other ^ ((other ^ u) & static_cast<Vertex>(c0_mask));
        const Vertex lo = std::min(anchor, sl.to);
        const Vertex hi = std::max(anchor, sl.to);
        const auto keep = static_cast<Vertex>(accept - 1);
        words[sl.edge >> 6] ^= accept << (sl.edge & 63);
        s.edge_count_ += accept * (1 - 2 * present);
        s.defects_[0] = (s.defects_[0] & keep) | (lo & ~keep);
        s.defects_[1] = (s.defects_[1] & keep) | (hi & ~keep);
        s.defect_count_ = static_cast<std::uint8_t>(s.defect_count_ ^ ((s.defect_count_ ^ (2 - 2 * closing)) & (0 - accept)));
        return accept != 0;
    }

    void advance(WormState& s, std::uint64_t steps, Engine& rng) const {
        for (std::uint64_t t = 0; t < steps; ++t) step(s, rng);
    }

  private:
    struct Slot {
        Vertex to;
        EdgeId edge;
        /// thresholds when the moving defect u lands on `to` (C2 -> C2)
        std::uint64_t add_moving;
        std::uint64_t remove_moving;
    };

    /// uniform01(r) < a  <=>  (r >> 11) < ceil(a * 2^53)
    static std::uint64_t threshold(double a) { return static_cast<std::uint64_t>(std::ceil(a * 0x1.0p53)); }

    template <class Gen>
    const Slot& pick(Vertex u, Gen& rng) const noexcept {
        const std::uint32_t begin = offsets_[u];
        return slots_[begin + uniform_index(rng, offsets_[u + 1] - begin)];
    }

    const Graph* graph_;
    std::size_t n_;
    std::vector<std::uint32_t> offsets_;
    std::vector<Slot> slots_;
    std::uint64_t add_ = 0;
    std::uint64_t remove_ = 0;
};

// ---------------------------------------------------------------------------
// Trajectories

struct RunOptions {
    /// Observer calls and the |A| trace happen at times divisible by stride.
    std::uint64_t stride = 1;
    /// Per-pair defect counters (dense upper triangle, skipped above max_tracked_vertices).
    bool track_pairs = true;
    std::size_t max_tracked_vertices = 4096;
    /// Recompute the boundary after every step and throw on mismatch.
    bool check_boundary = false;
};

struct RunStats {
    std::size_t vertex_count = 0;
    std::uint64_t steps = 0;
    /// States observed: s_0 .. s_steps.
    std::uint64_t samples = 0;
    std::uint64_t accepted = 0;
    std::uint64_t time_in_c0 = 0;
    std::uint64_t edge_count_sum = 0;
    std::vector<std::uint64_t> pair_counts;
    std::vector<std::uint32_t> edge_count_trace;

    [[nodiscard]] double fraction_c0() const noexcept {
        return samples == 0 ? 0.0 : static_cast<double>(time_in_c0) / static_cast<double>(samples);
    }
    [[nodiscard]] double mean_edge_count() const noexcept {
        return samples == 0 ? 0.0 : static_cast<double>(edge_count_sum) / static_cast<double>(samples);
    }
    [[nodiscard]] static std::size_t pair_index(std::size_t n, Vertex u, Vertex v) noexcept {
        if (u > v) std::swap(u, v);
        return u * n - u * (u + 1) / 2 + (v - u - 1);
    }
    /// Times spent with defects exactly {u, v}.
    [[nodiscard]] std::uint64_t pair_count(Vertex u, Vertex v) const {
        if (pair_counts.empty()) throw std::logic_error("pair counts were not tracked");
        return pair_counts.at(pair_index(vertex_count, u, v));
    }
};

struct NoObserver {
    void operator()(std::uint64_t, const WormState&) const noexcept {}
};

/// Applies `steps` transitions to `state`, accumulating statistics over s_0..s_steps.
template <class Observer>
    requires std::invocable<Observer&, std::uint64_t, const WormState&>
RunStats run(const Graph& g, WormState& state, std::uint64_t steps, const ChainParams& p, Engine& rng,
             Observer&& observe, const RunOptions& opt = {}) {
    if (opt.stride == 0) throw std::invalid_argument("stride must be positive");
    RunStats st;
    const std::size_t n = g.vertex_count();
    st.vertex_count = n;
    const bool pairs = opt.track_pairs && n <= opt.max_tracked_vertices;
    if (pairs) st.pair_counts.assign(n * (n - 1) / 2, 0);

    auto record = [&](std::uint64_t t) {
        ++st.samples;
        st.edge_count_sum += state.edge_count();
        if (state.in_c0()) {
            ++st.time_in_c0;
        } else if (pairs) {
            ++st.pair_counts[RunStats::pair_index(n, state.defects()[0], state.defects()[1])];
        }
        if (t % opt.stride == 0) {
            st.edge_count_trace.push_back(static_cast<std::uint32_t>(state.edge_count()));
            observe(t, state);
        }
    };

    const Sampler sampler(g, p);
    record(0);
    for (std::uint64_t t = 1; t <= steps; ++t) {
        if (sampler.step(state, rng)) ++st.accepted;
        if (opt.check_boundary && !state.consistent_with(g))
            throw std::logic_error("boundary cache diverged at step " + std::to_string(t));
        record(t);
    }
    st.steps = steps;
    return st;
}

inline RunStats run(const Graph& g, WormState& state, std::uint64_t steps, const ChainParams& p, Engine& rng,
                    const RunOptions& opt = {}) {
    return run(g, state, steps, p, rng, NoObserver{}, opt);
}

/// Advances `steps` transitions with no bookkeeping.
inline void advance(const Graph& g, WormState& state, std::uint64_t steps, const ChainParams& p, Engine& rng) {
    Sampler(g, p).advance(state, steps, rng);
}

}  // namespace wormchain
