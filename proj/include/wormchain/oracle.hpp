#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "graph.hpp"
#include "measure.hpp"
#include "verification.hpp"

// Brute-force ground truth for small graphs. Subsets of E are bit masks (bit e = edge e)
// and vertex sets are bit masks over V.

namespace wormchain::oracle {

using SubsetMask = std::uint32_t;
using VertexMask = std::uint64_t;

/// The requested exact computation is beyond its size cap.
class CapExceeded : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr std::size_t default_max_edges = 20;
inline constexpr std::size_t default_max_states = 4096;

inline VertexMask pair_mask(Vertex u, Vertex v) { return (VertexMask{1} << u) | (VertexMask{1} << v); }

/// Exact weights over every edge subset of a small graph.
struct ExactDistribution {
    std::size_t n = 0;
    std::size_t m = 0;
    double x = 0;
    /// Odd-vertex mask of every subset, indexed by subset mask.
    std::vector<VertexMask> boundary;
    /// lambda(C_W) for every realisable W with |W| in {0, 2, 4}.
    std::map<VertexMask, double> class_weights;
    /// Sum of x^|A| over all subsets.
    double total_weight = 0;
    /// Subsets in W = C0 u C2, ascending.
    std::vector<SubsetMask> states;
    /// subset mask -> position in `states`, or -1.
    std::vector<std::int32_t> state_index;
    /// Stationary law over `states`.
    std::vector<double> pi;
    /// Lambda(W), the normaliser of pi.
    double lambda_w = 0;
    /// Lambda(W u C4).
    double lambda_w_c4 = 0;

    [[nodiscard]] std::size_t boundary_size(SubsetMask a) const { return static_cast<std::size_t>(std::popcount(boundary[a])); }

    [[nodiscard]] double class_weight(VertexMask w) const {
        auto it = class_weights.find(w);
        return it == class_weights.end() ? 0.0 : it->second;
    }
    [[nodiscard]] double lambda_c0() const { return class_weight(0); }
    [[nodiscard]] double lambda_pair(Vertex u, Vertex v) const { return class_weight(pair_mask(u, v)); }

    /// Unnormalised Lambda: n x^|A| on C0, 2 x^|A| on C2, x^|A| on C4, 0 elsewhere.
    [[nodiscard]] double big_lambda(SubsetMask a) const {
        const std::size_t b = boundary_size(a);
        if (b > 4) return 0.0;
        return wormchain::class_weight(b, static_cast<std::size_t>(std::popcount(a)), n, x);
    }
    [[nodiscard]] double pi_of(SubsetMask a) const {
        const auto i = state_index[a];
        return i < 0 ? 0.0 : pi[static_cast<std::size_t>(i)];
    }
    [[nodiscard]] double pi_c0() const { return static_cast<double>(n) * lambda_c0() / lambda_w; }
    [[nodiscard]] double pi_pair(Vertex u, Vertex v) const { return 2.0 * lambda_pair(u, v) / lambda_w; }
    [[nodiscard]] double pi_c2() const { return 1.0 - pi_c0(); }
    [[nodiscard]] double pi_min() const { return *std::min_element(pi.begin(), pi.end()); }
};

/// Enumerates all 2^m subsets in Gray-code order, updating the boundary by parity flips.
inline ExactDistribution enumerate(const Graph& g, double x, std::size_t max_edges = default_max_edges) {
    const std::size_t m = g.edge_count();
    if (m > max_edges || m > 30)
        throw CapExceeded("exact mode cap exceeded: m = " + std::to_string(m) + " > " + std::to_string(max_edges));
    if (g.vertex_count() > 64) throw CapExceeded("exact mode cap exceeded: more than 64 vertices");
    if (!(x > 0.0 && x < 1.0)) throw std::domain_error("x must lie in (0,1)");

    ExactDistribution d;
    d.n = g.vertex_count();
    d.m = m;
    d.x = x;
    const std::size_t count = std::size_t{1} << m;
    d.boundary.assign(count, 0);
    std::vector<double> x_pow(m + 1, 1.0);
    for (std::size_t k = 1; k <= m; ++k) x_pow[k] = x_pow[k - 1] * x;
    std::vector<VertexMask> edge_ends(m);
    for (EdgeId e = 0; e < m; ++e) edge_ends[e] = pair_mask(g.edge(e).u, g.edge(e).v);

    std::unordered_map<VertexMask, CompensatedSum> sums;
    CompensatedSum total;
    VertexMask odd = 0;
    SubsetMask gray = 0;
    for (std::size_t i = 0; i < count; ++i) {
        if (i > 0) {
            const auto e = static_cast<std::size_t>(std::countr_zero(i));
            gray ^= SubsetMask{1} << e;
            odd ^= edge_ends[e];
        }
        d.boundary[gray] = odd;
        const double w = x_pow[static_cast<std::size_t>(std::popcount(gray))];
        total += w;
        if (std::popcount(odd) <= 4) sums[odd] += w;
    }
    d.total_weight = total.value();
    for (const auto& [w, s] : sums) d.class_weights.emplace(w, s.value());

    d.state_index.assign(count, -1);
    CompensatedSum lw;
    CompensatedSum lw4;
    for (SubsetMask a = 0; a < count; ++a) {
        const double big = d.big_lambda(a);
        lw4 += big;
        if (d.boundary_size(a) <= 2) {
            d.state_index[a] = static_cast<std::int32_t>(d.states.size());
            d.states.push_back(a);
            lw += big;
        }
    }
    d.lambda_w = lw.value();
    d.lambda_w_c4 = lw4.value();
    d.pi.reserve(d.states.size());
    for (SubsetMask a : d.states) d.pi.push_back(d.big_lambda(a) / d.lambda_w);
    return d;
}

/// <s_u s_v> = lambda(C_uv) / lambda(C0).
inline double exact_two_point(const ExactDistribution& d, Vertex u, Vertex v) {
    if (u == v) return 1.0;
    return d.lambda_pair(u, v) / d.lambda_c0();
}

/// Same correlation through the worm measure: (n/2) pi(C_uv) / pi(C0).
inline double exact_two_point_via_pi(const ExactDistribution& d, Vertex u, Vertex v) {
    if (u == v) return 1.0;
    CompensatedSum puv;
    CompensatedSum p0;
    const VertexMask target = pair_mask(u, v);
    for (std::size_t i = 0; i < d.states.size(); ++i) {
        const VertexMask b = d.boundary[d.states[i]];
        if (b == 0) p0 += d.pi[i];
        if (b == target) puv += d.pi[i];
    }
    return 0.5 * static_cast<double>(d.n) * puv.value() / p0.value();
}

/// chi = beta / pi(C0).
inline double exact_chi(const ExactDistribution& d) { return susceptibility(d.pi_c0(), std::atanh(d.x)); }

/// chi = (beta/n) sum_{u,v} <s_u s_v>, summed from class weights.
inline double exact_chi_via_correlations(const ExactDistribution& d) {
    CompensatedSum s;
    for (Vertex u = 0; u < d.n; ++u)
        for (Vertex v = 0; v < d.n; ++v) s += exact_two_point(d, u, v);
    return std::atanh(d.x) * s.value() / static_cast<double>(d.n);
}

inline double exact_two_point(const Graph& g, double x, Vertex u, Vertex v) {
    return exact_two_point(enumerate(g, x), u, v);
}
inline double exact_chi(const Graph& g, double x) { return exact_chi(enumerate(g, x)); }

// ---------------------------------------------------------------------------
// Transition matrix

struct TransitionMatrix {
    /// Shared with the ExactDistribution it was built from.
    std::vector<SubsetMask> states;
    std::vector<std::int32_t> state_index;
    Eigen::MatrixXd P;

    [[nodiscard]] double operator()(SubsetMask from, SubsetMask to) const {
        const auto i = state_index.at(from);
        const auto j = state_index.at(to);
        if (i < 0 || j < 0) return 0.0;
        return P(i, j);
    }
    [[nodiscard]] std::size_t size() const noexcept { return states.size(); }
};

namespace detail {

/// Acceptance probability written on masks, kept separate from the sampler's implementation.
inline double mask_acceptance(const Graph& g, VertexMask odd, SubsetMask a, Vertex u, Vertex v, EdgeId e, double x) {
    const bool adding = ((a >> e) & 1U) == 0;
    const double x_pm = adding ? x : 1.0 / x;
    const VertexMask after = odd ^ pair_mask(u, v);
    const bool u_defect = (odd >> u) & 1U;
    if (std::popcount(odd) == 2 && u_defect && std::popcount(after) == 2) {
        return 0.5 * std::min(1.0, static_cast<double>(g.degree(u)) / static_cast<double>(g.degree(v)) * x_pm);
    }
    return 0.5 * std::min(1.0, x_pm);
}

}  // namespace detail

/// Exact one-step matrix: sum over proposals (u, v) of proposal probability times acceptance.
inline TransitionMatrix transition_matrix(const Graph& g, const ExactDistribution& d,
                                          std::size_t max_states = default_max_states) {
    if (d.states.size() > max_states)
        throw CapExceeded("exact mode cap exceeded: " + std::to_string(d.states.size()) + " states > " +
                          std::to_string(max_states));
    TransitionMatrix t;
    t.states = d.states;
    t.state_index = d.state_index;
    const auto size = static_cast<Eigen::Index>(d.states.size());
    t.P = Eigen::MatrixXd::Zero(size, size);
    const auto n = static_cast<double>(g.vertex_count());
    for (Eigen::Index i = 0; i < size; ++i) {
        const SubsetMask a = d.states[static_cast<std::size_t>(i)];
        const VertexMask odd = d.boundary[a];
        std::vector<Vertex> starts;
        double start_prob = 0;
        if (odd == 0) {
            for (Vertex u = 0; u < g.vertex_count(); ++u) starts.push_back(u);
            start_prob = 1.0 / n;
        } else {
            for (Vertex u = 0; u < g.vertex_count(); ++u)
                if ((odd >> u) & 1U) starts.push_back(u);
            start_prob = 0.5;
        }
        CompensatedSum stay;
        for (Vertex u : starts) {
            auto nb = g.neighbors(u);
            auto ids = g.incident_edges(u);
            const double prop = start_prob / static_cast<double>(nb.size());
            for (std::size_t k = 0; k < nb.size(); ++k) {
                const double acc = detail::mask_acceptance(g, odd, a, u, nb[k], ids[k], d.x);
                const SubsetMask b = a ^ (SubsetMask{1} << ids[k]);
                const auto j = d.state_index[b];
                if (j < 0) throw std::logic_error("proposal left the worm configuration space");
                t.P(i, j) += prop * acc;
                stay += prop * (1.0 - acc);
            }
        }
        t.P(i, i) += stay.value();
    }
    return t;
}

inline TransitionMatrix transition_matrix(const Graph& g, double x) { return transition_matrix(g, enumerate(g, x)); }

// ---------------------------------------------------------------------------
// Mixing

struct MixingReport {
    /// d(t) = max_s ||P^t(s, .) - pi||_TV for t = 0, 1, ...
    std::vector<double> tv_curve;
    /// (delta, mix(delta)) in the order requested.
    std::vector<std::pair<double, std::uint64_t>> mixing_times;
    /// Eigenvalues of the symmetrised chain, descending.
    std::vector<double> eigenvalues;
    double second_eigenvalue = 0;
    /// Second-largest eigenvalue modulus.
    double slem = 0;
    double relaxation_time = 0;

    [[nodiscard]] std::uint64_t mixing_time(double delta) const {
        for (const auto& [dl, t] : mixing_times)
            if (dl == delta) return t;
        throw std::out_of_range("delta not in report");
    }
};

/// Exact worst-case TV curve by repeated powering until d(t) <= min delta, plus the spectrum.
inline MixingReport mixing_report(const TransitionMatrix& t, std::span<const double> pi, std::span<const double> deltas,
                                  std::uint64_t max_iterations = 1'000'000) {
    if (deltas.empty()) throw std::invalid_argument("no delta values");
    const auto size = static_cast<Eigen::Index>(t.size());
    if (static_cast<std::size_t>(size) != pi.size()) throw std::invalid_argument("pi size mismatch");
    for (double dl : deltas)
        if (!(dl > 0.0 && dl < 1.0)) throw std::domain_error("delta must lie in (0,1)");
    const double target = *std::min_element(deltas.begin(), deltas.end());

    MixingReport report;
    const Eigen::Map<const Eigen::RowVectorXd> stationary(pi.data(), size);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(size, size);
    for (std::uint64_t step = 0;; ++step) {
        const double dist = 0.5 * (power.rowwise() - stationary).cwiseAbs().rowwise().sum().maxCoeff();
        report.tv_curve.push_back(dist);
        if (dist <= target) break;
        if (step >= max_iterations)
            throw std::runtime_error("TV distance did not reach " + std::to_string(target) + " within " +
                                     std::to_string(max_iterations) + " steps; chain may not be ergodic");
        power = power * t.P;
    }
    for (double dl : deltas) {
        std::uint64_t when = 0;
        while (report.tv_curve[when] > dl) ++when;
        report.mixing_times.emplace_back(dl, when);
    }

    // D^{1/2} P D^{-1/2} is symmetric for a reversible chain.
    const Eigen::ArrayXd root = Eigen::Map<const Eigen::ArrayXd>(pi.data(), size).sqrt();
    Eigen::MatrixXd sym = root.matrix().asDiagonal() * t.P * root.inverse().matrix().asDiagonal();
    sym = 0.5 * (sym + sym.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    const Eigen::VectorXd& ev = solver.eigenvalues();
    for (Eigen::Index i = size - 1; i >= 0; --i) report.eigenvalues.push_back(ev(i));
    if (size >= 2) {
        report.second_eigenvalue = report.eigenvalues[1];
        report.slem = std::max(std::abs(report.eigenvalues[1]), std::abs(report.eigenvalues.back()));
        report.relaxation_time = 1.0 / (1.0 - report.slem);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Invariant suite

struct ChainChecks {
    double stationarity_error = 0;
    double detailed_balance_error = 0;
    double row_sum_error = 0;
    double min_diagonal = 1;
    /// Smallest positive off-diagonal entry.
    double min_positive_off_diagonal = 1;
};

inline ChainChecks chain_checks(const ExactDistribution& d, const TransitionMatrix& t) {
    ChainChecks c;
    const auto size = static_cast<Eigen::Index>(t.size());
    const Eigen::Map<const Eigen::RowVectorXd> pi(d.pi.data(), size);
    c.stationarity_error = (pi * t.P - pi).cwiseAbs().maxCoeff();
    c.row_sum_error = (t.P.rowwise().sum().array() - 1.0).abs().maxCoeff();
    c.min_diagonal = t.P.diagonal().minCoeff();
    for (Eigen::Index i = 0; i < size; ++i)
        for (Eigen::Index j = 0; j < size; ++j) {
            c.detailed_balance_error = std::max(c.detailed_balance_error, std::abs(pi(i) * t.P(i, j) - pi(j) * t.P(j, i)));
            if (i != j && t.P(i, j) > 0) c.min_positive_off_diagonal = std::min(c.min_positive_off_diagonal, t.P(i, j));
        }
    return c;
}

/// Exhaustive checks of the exact chain and measure on a small graph; mixing times at each delta.
struct OracleReport {
    ExactDistribution dist;
    ChainChecks chain;
    MixingReport mixing;
    std::vector<std::pair<double, double>> mix_bounds;
    VerificationRecord record;
};

inline OracleReport verify_exact_invariants(const Graph& g, double x, std::span<const double> deltas,
                                            std::size_t max_edges = default_max_edges,
                                            std::size_t max_states = default_max_states) {
    OracleReport r{enumerate(g, x, max_edges), {}, {}, {}, {}};
    const ExactDistribution& d = r.dist;
    const TransitionMatrix t = transition_matrix(g, d, max_states);
    r.chain = chain_checks(d, t);
    r.mixing = mixing_report(t, d.pi, deltas);
    VerificationRecord& rec = r.record;
    const auto n = static_cast<double>(d.n);

    rec.add("stationarity |pi P - pi|", r.chain.stationarity_error, 1e-12);
    rec.add("detailed balance", r.chain.detailed_balance_error, 1e-12);
    rec.add("row sums", r.chain.row_sum_error, 1e-12);
    rec.add("laziness 1/2 <= min P(s,s)", 0.5, r.chain.min_diagonal);
    rec.add_rel("x/(2 n Delta) <= min off-diagonal P", x / (2.0 * n * static_cast<double>(g.max_degree())),
                r.chain.min_positive_off_diagonal);
    rec.add("total weight = (1+x)^m", std::abs(d.total_weight - std::pow(1.0 + x, static_cast<double>(d.m))),
            1e-12 * std::pow(1.0 + x, static_cast<double>(d.m)));
    CompensatedSum pi_total;
    for (double p : d.pi) pi_total += p;
    rec.add("sum pi = 1", std::abs(pi_total.value() - 1.0), 1e-12);

    double worst_class = 0;
    for (const auto& [w, lw] : d.class_weights) worst_class = std::max(worst_class, lw);
    rec.add_rel("lambda(C_W) <= lambda(C0)", worst_class, d.lambda_c0());
    rec.add_rel("1/(2n+1) <= pi(C0)", 1.0 / (2.0 * n + 1.0), d.pi_c0());

    const RatioBounds rb = ratio_bounds(g, x);
    const double ratio = d.pi_c2() / d.pi_c0();
    rec.add_rel("ratio lower bound", rb.lower, ratio);
    rec.add_rel("ratio upper bound", ratio, rb.upper);

    double route_gap = 0;
    for (Vertex u = 0; u < d.n; ++u) {
        const auto dist = bfs_distances(g, u, g.full_subset());
        for (Vertex v = u + 1; v < d.n; ++v) {
            const double dx = std::pow(x, static_cast<double>(dist[v]));
            const std::string pair = " (" + std::to_string(u) + "," + std::to_string(v) + ")";
            rec.add_rel("lambda(C0) <= x^-d lambda(C_uv)" + pair, d.lambda_c0(), d.lambda_pair(u, v) / dx);
            rec.add_rel("2x^d/(n(n+1)) <= pi(C_uv)" + pair, 2.0 * dx / (n * (n + 1.0)), d.pi_pair(u, v));
            route_gap = std::max(route_gap, std::abs(exact_two_point(d, u, v) - exact_two_point_via_pi(d, u, v)));
        }
    }
    rec.add("two-point: class-weight route = worm-measure route", route_gap, 1e-12);
    rec.add("chi: pi(C0) route = correlation-sum route", std::abs(exact_chi(d) - exact_chi_via_correlations(d)),
            1e-12 * exact_chi(d));

    bool monotone = true;
    for (std::size_t s = 1; s < r.mixing.tv_curve.size(); ++s)
        monotone = monotone && r.mixing.tv_curve[s] <= r.mixing.tv_curve[s - 1] + 1e-15;
    rec.add_flag("d(t) nonincreasing", monotone);
    for (const auto& [dl, mix] : r.mixing.mixing_times) {
        const double bound = mixing_time_bound(g, x, dl);
        r.mix_bounds.emplace_back(dl, bound);
        rec.add("mix(" + std::to_string(dl) + ") <= mixing-time bound", static_cast<double>(mix), bound);
    }
    return r;
}

}  // namespace wormchain::oracle
