#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "graph.hpp"
#include "measure.hpp"
#include "oracle.hpp"
#include "verification.hpp"

namespace wormchain::flows {

using oracle::SubsetMask;

inline constexpr std::size_t default_max_edges = 12;

inline EdgeSubset to_subset(const Graph& g, SubsetMask a) { return EdgeSubset::from_mask(g.edge_count(), a); }

/// gamma_{I,F}: flip the shortest defect path A0 from the lower defect of I, then each cycle of
/// (I xor F) \ A0 in decomposition order, one edge per step.
struct CanonicalPath {
    SubsetMask initial = 0;
    SubsetMask final = 0;
    std::vector<Vertex> defect_path;
    std::vector<Cycle> cycles;
    /// S_0 = I, ..., S_L = F.
    std::vector<SubsetMask> states;
    /// Edge flipped between S_i and S_{i+1}.
    std::vector<EdgeId> flips;

    [[nodiscard]] std::size_t length() const noexcept { return flips.size(); }
};

inline CanonicalPath canonical_path(const Graph& g, SubsetMask initial, SubsetMask final) {
    if (g.edge_count() > 32) throw std::invalid_argument("canonical paths use 32-bit subset masks");
    const EdgeSubset is = to_subset(g, initial);
    const EdgeSubset fs = to_subset(g, final);
    const auto odd = boundary(g, is);
    if (odd.size() != 2) throw std::invalid_argument("initial state must lie in C2");
    if (!boundary(g, fs).empty()) throw std::invalid_argument("final state must lie in C0");

    CanonicalPath path;
    path.initial = initial;
    path.final = final;
    const EdgeSubset diff = is ^ fs;
    path.defect_path = shortest_path(g, odd[0], odd[1], diff);
    EdgeSubset rest = diff;
    for (EdgeId e : path_edges(g, path.defect_path)) {
        rest.reset(e);
        path.flips.push_back(e);
    }
    path.cycles = decompose_even_subgraph(g, rest);
    for (const Cycle& c : path.cycles) path.flips.insert(path.flips.end(), c.edges.begin(), c.edges.end());

    SubsetMask cur = initial;
    path.states.push_back(cur);
    for (EdgeId e : path.flips) {
        cur ^= SubsetMask{1} << e;
        path.states.push_back(cur);
    }
    if (cur != final) throw std::logic_error("canonical path does not end at F");
    return path;
}

inline CanonicalPath canonical_path(const Graph& g, const EdgeSubset& initial, const EdgeSubset& final) {
    if (g.edge_count() > 32) throw std::invalid_argument("canonical paths use 32-bit subset masks");
    return canonical_path(g, static_cast<SubsetMask>(initial.to_mask()), static_cast<SubsetMask>(final.to_mask()));
}

struct Transition {
    SubsetMask from;
    SubsetMask to;
};

/// eta_e(I, F) = I xor F xor A for a transition e = (A, A') of gamma_{I,F}.
inline SubsetMask eta(const Graph& g, const Transition& e, SubsetMask initial, SubsetMask final) {
    const CanonicalPath path = canonical_path(g, initial, final);
    for (std::size_t i = 0; i < path.length(); ++i)
        if (path.states[i] == e.from && path.states[i + 1] == e.to) return initial ^ final ^ e.from;
    throw std::invalid_argument("transition is not on the canonical path of (I, F)");
}

/// Calls visit(path) for every (I, F) in C2 x C0, I outer, both ascending.
template <class Visitor>
void for_each_canonical_path(const Graph& g, const oracle::ExactDistribution& d, Visitor&& visit) {
    std::vector<SubsetMask> c0;
    std::vector<SubsetMask> c2;
    for (SubsetMask a : d.states) (d.boundary[a] == 0 ? c0 : c2).push_back(a);
    for (SubsetMask i : c2)
        for (SubsetMask f : c0) visit(canonical_path(g, i, f));
}

// ---------------------------------------------------------------------------
// Congestion

struct TransitionLoad {
    SubsetMask from = 0;
    SubsetMask to = 0;
    double load = 0;
    /// Sum of Lambda(eta_e(I, F)) over the pairs routed through this transition.
    double eta_weight = 0;
    std::size_t pairs = 0;
};

struct CongestionReport {
    double x = 0;
    std::size_t n = 0;
    std::size_t m = 0;
    std::size_t max_degree = 0;
    std::size_t pair_count = 0;
    /// L(Gamma).
    std::size_t max_path_length = 0;
    TransitionLoad max_transition;
    /// phi(Gamma) = L(Gamma) * max load.
    double congestion = 0;
    /// (1/4x) Delta n^5 m.
    double bound = 0;
    std::size_t loaded_transitions = 0;
    /// Heaviest transitions, descending by load.
    std::vector<TransitionLoad> top_loads;
};

/// (1/4x) Delta(G) n^5 m.
inline double congestion_bound(const Graph& g, double x) {
    return static_cast<double>(g.max_degree()) * std::pow(static_cast<double>(g.vertex_count()), 5.0) *
           static_cast<double>(g.edge_count()) / (4.0 * x);
}

namespace detail {

/// Dense per-transition accumulator keyed by (state index of A, flipped edge).
struct LoadTable {
    std::size_t m;
    std::vector<CompensatedSum> load;
    std::vector<CompensatedSum> eta_weight;
    std::vector<std::size_t> pairs;

    LoadTable(std::size_t states, std::size_t edges)
        : m(edges), load(states * edges), eta_weight(states * edges), pairs(states * edges, 0) {}
    [[nodiscard]] std::size_t key(std::int32_t state, EdgeId e) const { return static_cast<std::size_t>(state) * m + e; }
};

inline CongestionReport summarise(const Graph& g, const oracle::ExactDistribution& d, const LoadTable& table,
                                  std::size_t pair_count, std::size_t max_len, std::size_t top_k) {
    CongestionReport r;
    r.x = d.x;
    r.n = d.n;
    r.m = d.m;
    r.max_degree = g.max_degree();
    r.pair_count = pair_count;
    r.max_path_length = max_len;
    r.bound = congestion_bound(g, d.x);
    std::vector<TransitionLoad> all;
    for (std::size_t k = 0; k < table.load.size(); ++k) {
        if (table.pairs[k] == 0) continue;
        const SubsetMask from = d.states[k / table.m];
        const auto e = static_cast<EdgeId>(k % table.m);
        all.push_back({from, from ^ (SubsetMask{1} << e), table.load[k].value(), table.eta_weight[k].value(),
                       table.pairs[k]});
    }
    r.loaded_transitions = all.size();
    std::stable_sort(all.begin(), all.end(),
                     [](const TransitionLoad& a, const TransitionLoad& b) { return a.load > b.load; });
    if (!all.empty()) r.max_transition = all.front();
    r.congestion = static_cast<double>(max_len) * r.max_transition.load;
    all.resize(std::min(all.size(), top_k));
    r.top_loads = std::move(all);
    return r;
}

}  // namespace detail

/// Builds every gamma_{I,F} and accumulates pi(I)pi(F)/(pi(A)P(A,A')) on each transition.
inline CongestionReport congestion(const Graph& g, double x, std::size_t top_k = 10,
                                   std::size_t max_edges = default_max_edges) {
    if (g.edge_count() > max_edges)
        throw oracle::CapExceeded("exact mode cap exceeded: m = " + std::to_string(g.edge_count()) + " > " +
                                  std::to_string(max_edges));
    const auto d = oracle::enumerate(g, x, max_edges);
    const auto t = oracle::transition_matrix(g, d);
    detail::LoadTable table(d.states.size(), d.m);
    std::size_t pairs = 0;
    std::size_t max_len = 0;
    for_each_canonical_path(g, d, [&](const CanonicalPath& path) {
        ++pairs;
        max_len = std::max(max_len, path.length());
        const double demand = d.pi_of(path.initial) * d.pi_of(path.final);
        for (std::size_t i = 0; i < path.length(); ++i) {
            const auto a = d.state_index[path.states[i]];
            const auto b = d.state_index[path.states[i + 1]];
            const std::size_t k = table.key(a, path.flips[i]);
            table.load[k] += demand / (d.pi[static_cast<std::size_t>(a)] * t.P(a, b));
            table.eta_weight[k] += d.big_lambda(path.initial ^ path.final ^ path.states[i]);
            ++table.pairs[k];
        }
    });
    return detail::summarise(g, d, table, pairs, max_len, top_k);
}

// ---------------------------------------------------------------------------
// Bound chain verification

struct BoundChainReport {
    double delta = 0;
    CongestionReport congestion;
    std::uint64_t mixing_time = 0;
    /// log(1/(pi_min delta)) [2 + 4(r + 1/r)] phi.
    double flow_first = 0;
    /// (log(8/x) - log(delta)/m)(6 + 2/(mx)) m n phi.
    double flow_second = 0;
    double mix_bound = 0;
    std::size_t incidences = 0;
    VerificationRecord record;
};

/// Exhaustively checks every step of the congestion argument with exact quantities.
/// Violations are reported as failed checks with a counterexample in the detail field.
inline BoundChainReport verify_bound_chain(const Graph& g, double x, double delta, std::size_t top_k = 10,
                                               std::size_t max_edges = default_max_edges) {
    if (g.edge_count() > max_edges)
        throw oracle::CapExceeded("exact mode cap exceeded: m = " + std::to_string(g.edge_count()) + " > " +
                                  std::to_string(max_edges));
    const auto d = oracle::enumerate(g, x, max_edges);
    const auto t = oracle::transition_matrix(g, d);
    const auto n = static_cast<double>(d.n);
    BoundChainReport r;
    r.delta = delta;
    VerificationRecord& rec = r.record;

    detail::LoadTable table(d.states.size(), d.m);
    std::vector<std::pair<std::size_t, SubsetMask>> images;
    std::size_t pairs = 0;
    std::size_t max_len = 0;
    std::string step_violation;
    std::string shape_violation;
    std::string eta_class_violation;
    double worst_lambda_ratio = 0;
    std::string lambda_violation;

    auto describe = [](SubsetMask i, SubsetMask f, SubsetMask a) {
        std::ostringstream s;
        s << "I=" << i << " F=" << f << " A=" << a;
        return s.str();
    };

    for_each_canonical_path(g, d, [&](const CanonicalPath& path) {
        ++pairs;
        max_len = std::max(max_len, path.length());
        const auto diff_size = static_cast<std::size_t>(std::popcount(path.initial ^ path.final));
        std::vector<SubsetMask> seen(path.states);
        std::sort(seen.begin(), seen.end());
        const bool simple = std::adjacent_find(seen.begin(), seen.end()) == seen.end();
        if ((path.length() != diff_size || path.length() > d.m || !simple) && shape_violation.empty())
            shape_violation = describe(path.initial, path.final, 0);

        const double demand = d.pi_of(path.initial) * d.pi_of(path.final);
        const double big_if = d.big_lambda(path.initial) * d.big_lambda(path.final);
        for (std::size_t i = 0; i < path.length(); ++i) {
            const SubsetMask a = path.states[i];
            const SubsetMask b = path.states[i + 1];
            const auto ia = d.state_index[a];
            const auto ib = d.state_index[b];
            if (ia < 0 || ib < 0 || t.P(ia, ib) <= 0.0) {
                if (step_violation.empty()) step_violation = describe(path.initial, path.final, a);
                continue;
            }
            const SubsetMask image = path.initial ^ path.final ^ a;
            const std::size_t image_class = d.boundary_size(image);
            if (image_class != 0 && image_class != 2 && image_class != 4 && eta_class_violation.empty())
                eta_class_violation = describe(path.initial, path.final, a);
            const double lhs = big_if / d.big_lambda(a);
            const double rhs = n * d.big_lambda(image);
            const double ratio = rhs > 0 ? lhs / rhs : std::numeric_limits<double>::infinity();
            if (ratio > worst_lambda_ratio) worst_lambda_ratio = ratio;
            if (!leq_rel(lhs, rhs) && lambda_violation.empty())
                lambda_violation = describe(path.initial, path.final, a) + " lhs=" + std::to_string(lhs) +
                                " rhs=" + std::to_string(rhs);

            const std::size_t k = table.key(ia, path.flips[i]);
            table.load[k] += demand / (d.pi[static_cast<std::size_t>(ia)] * t.P(ia, ib));
            table.eta_weight[k] += d.big_lambda(image);
            ++table.pairs[k];
            images.emplace_back(k, image);
            ++r.incidences;
        }
    });

    rec.add_flag("every path step has positive probability", step_violation.empty(), step_violation);
    rec.add_flag("paths are simple with length |I xor F| <= m", shape_violation.empty(), shape_violation);
    rec.add_flag("eta image lies in W u C4", eta_class_violation.empty(), eta_class_violation);
    rec.add_rel("Lambda(I)Lambda(F)/Lambda(A) <= n Lambda(eta) (worst ratio)", worst_lambda_ratio, 1.0, lambda_violation);

    std::sort(images.begin(), images.end());
    auto dup = std::adjacent_find(images.begin(), images.end());
    std::string inj_detail;
    if (dup != images.end()) {
        const SubsetMask from = d.states[dup->first / table.m];
        inj_detail = "transition from " + std::to_string(from) + " flipping edge " +
                     std::to_string(dup->first % table.m) + " has repeated image " + std::to_string(dup->second);
    }
    rec.add_flag("eta_e injective on every transition", dup == images.end(), inj_detail);

    r.congestion = detail::summarise(g, d, table, pairs, max_len, top_k);
    const CongestionReport& c = r.congestion;
    rec.add_rel("phi <= (1/4x) Delta n^5 m", c.congestion, c.bound);

    if (c.loaded_transitions > 0) {
        const double p_max = t(c.max_transition.from, c.max_transition.to);
        const double m = static_cast<double>(d.m);
        const double first = m / (p_max * d.lambda_w) * n * c.max_transition.eta_weight;
        const double second = m * n / p_max * d.lambda_w_c4 / d.lambda_w;
        rec.add_rel("phi <= m n sum Lambda(eta) / (P Lambda(W))", c.congestion, first);
        rec.add_rel("m n sum Lambda(eta) / (P Lambda(W)) <= m n Lambda(W u C4) / (P Lambda(W))", first, second);
        rec.add_rel("m n Lambda(W u C4) / (P Lambda(W)) <= (1/4x) Delta n^5 m", second, c.bound);
        rec.add_rel("Lambda(W u C4)/Lambda(W) <= n^3/8", d.lambda_w_c4 / d.lambda_w, n * n * n / 8.0);
    }

    const std::vector<double> deltas{delta};
    const auto mix = oracle::mixing_report(t, d.pi, deltas);
    r.mixing_time = mix.mixing_times.front().second;
    const double ratio = d.pi_c2() / d.pi_c0();
    const auto m = static_cast<double>(d.m);
    r.flow_first = std::log(1.0 / (d.pi_min() * delta)) * (2.0 + 4.0 * (ratio + 1.0 / ratio)) * c.congestion;
    r.flow_second = (std::log(8.0 / x) - std::log(delta) / m) * (6.0 + 2.0 / (m * x)) * m * n * c.congestion;
    r.mix_bound = mixing_time_bound(g, x, delta);
    rec.add("mix(delta) <= first line of flow bound", static_cast<double>(r.mixing_time), r.flow_first);
    rec.add_rel("first line <= second line of flow bound", r.flow_first, r.flow_second);
    rec.add_rel("second line <= mixing-time bound", r.flow_second, r.mix_bound);
    rec.add("mix(delta) <= mixing-time bound", static_cast<double>(r.mixing_time), r.mix_bound);
    return r;
}

}  // namespace wormchain::flows
