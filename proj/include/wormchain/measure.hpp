#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "graph.hpp"
#include "rng.hpp"
#include "worm.hpp"

namespace wormchain {

/// lambda(A) = x^|A|.
inline double lambda_weight(const EdgeSubset& a, double x) { return std::pow(x, static_cast<double>(a.count())); }

/// Unnormalised worm weight: n x^|A| on C0, 2 x^|A| on C2, x^|A| on C4 (the Lambda extension).
inline double class_weight(std::size_t boundary_size, std::size_t edge_count, std::size_t n, double x) {
    const double base = std::pow(x, static_cast<double>(edge_count));
    switch (boundary_size) {
        case 0: return static_cast<double>(n) * base;
        case 2: return 2.0 * base;
        case 4: return base;
        default: throw std::invalid_argument("no weight for boundary size " + std::to_string(boundary_size));
    }
}

/// Upper bound on the mixing time,
///   ceil( (1/2x) (ln(8/x) - ln(delta)/m) (3 + 1/(m x)) Delta n^6 m^2 ).
/// Returned as a double since it overflows 64 bits on moderately sized lattices.
inline double mixing_time_bound(const Graph& g, double x, double delta) {
    if (!(x > 0.0 && x < 1.0)) throw std::domain_error("x must lie in (0,1)");
    if (!(delta > 0.0 && delta < 1.0)) throw std::domain_error("delta must lie in (0,1)");
    const auto n = static_cast<double>(g.vertex_count());
    const auto m = static_cast<double>(g.edge_count());
    const auto max_deg = static_cast<double>(g.max_degree());
    const double value = (1.0 / (2.0 * x)) * (std::log(8.0 / x) - std::log(delta) / m) * (3.0 + 1.0 / (m * x)) *
                         max_deg * std::pow(n, 6.0) * m * m;
    return std::ceil(value);
}

/// Converts a step count held in a double; throws if it is not representable.
inline std::uint64_t to_step_count(double steps) {
    if (!(steps >= 0.0) || steps >= 0x1.0p63) throw std::overflow_error("step count too large to run");
    return static_cast<std::uint64_t>(steps);
}

/// Bounds on pi(C2)/pi(C0): [(2/n) mx/(mx+1), n-1].
struct RatioBounds {
    double lower;
    double upper;
};

inline RatioBounds ratio_bounds(const Graph& g, double x) {
    const auto n = static_cast<double>(g.vertex_count());
    const double mx = static_cast<double>(g.edge_count()) * x;
    return {(2.0 / n) * mx / (mx + 1.0), n - 1.0};
}

/// chi = beta / pi(C0).
inline double susceptibility(double pi_c0, double beta) {
    if (!(pi_c0 > 0.0)) throw std::domain_error("pi(C0) must be positive");
    if (pi_c0 > 1.0) throw std::domain_error("pi(C0) must not exceed 1");
    return beta / pi_c0;
}

/// <s_u s_v> = (n/2) pi(C_uv) / pi(C0), clamped to [0, 1] so noisy estimates stay physical.
inline double two_point(double pi_cuv, double pi_c0, std::size_t n) {
    if (!(pi_c0 > 0.0)) throw std::domain_error("pi(C0) must be positive");
    const double value = 0.5 * static_cast<double>(n) * pi_cuv / pi_c0;
    return std::clamp(value, 0.0, 1.0);
}

/// Median; even-length inputs average the two middle order statistics.
inline double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of empty sample");
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) return upper;
    const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

// ---------------------------------------------------------------------------
// Events and the approximation scheme

/// Target event: membership in C0, or in C_uv for a specific pair.
struct Event {
    enum class Kind { c0, pair };
    Kind kind = Kind::c0;
    Vertex u = 0;
    Vertex v = 0;

    static Event c0() { return {}; }
    static Event pair(Vertex a, Vertex b) {
        if (a == b) throw std::invalid_argument("pair event needs distinct vertices");
        return {Kind::pair, std::min(a, b), std::max(a, b)};
    }
    [[nodiscard]] bool contains(const WormState& s) const noexcept {
        if (kind == Kind::c0) return s.in_c0();
        return !s.in_c0() && s.defects()[0] == u && s.defects()[1] == v;
    }
};

struct FprasPlan {
    Event event;
    double epsilon = 0;
    double eta = 0;
    /// Distance budget for pair events (0 for C0).
    std::size_t k = 0;
    /// Polynomial witness S(n) with pi(event) >= 1/S(n).
    double witness = 0;
    double delta = 0;
    /// Mixing-time bound at delta, possibly beyond 64-bit range.
    double bound_run_length = 0;
    /// Steps per sample actually used; empty when the bound is not representable.
    std::optional<std::uint64_t> run_length;
    bool run_length_overridden = false;
    std::uint64_t outer_reps = 0;
    std::uint64_t inner_reps = 0;
};

/// Builds the run plan: S(n) = 2n+1 for C0 or n(n+1)x^-k/2 for C_uv, delta = eps/(16 S),
/// J = 7 ceil(ln 1/eta) + 1 outer and I = 20 ceil(S/eps^2 + 1) inner repetitions.
inline FprasPlan make_fpras_plan(const Graph& g, const ChainParams& p, const Event& event, double epsilon, double eta,
                                 std::optional<std::size_t> k = std::nullopt) {
    if (!(epsilon > 0.0 && epsilon < 0.25)) throw std::domain_error("epsilon must lie in (0,1/4)");
    if (!(eta > 0.0 && eta < 0.25)) throw std::domain_error("eta must lie in (0,1/4)");
    FprasPlan plan;
    plan.event = event;
    plan.epsilon = epsilon;
    plan.eta = eta;
    const auto n = static_cast<double>(g.vertex_count());
    if (event.kind == Event::Kind::c0) {
        plan.witness = 2.0 * n + 1.0;
    } else {
        if (event.v >= g.vertex_count()) throw std::invalid_argument("pair vertex out of range");
        const std::size_t d = distance(g, event.u, event.v);
        plan.k = k.value_or(d);
        if (d > plan.k)
            throw std::invalid_argument("pair (" + std::to_string(event.u) + "," + std::to_string(event.v) +
                                        ") is at distance " + std::to_string(d) + " > k = " + std::to_string(plan.k));
        plan.witness = n * (n + 1.0) * std::pow(p.x(), -static_cast<double>(plan.k)) / 2.0;
    }
    plan.delta = epsilon / (16.0 * plan.witness);
    plan.bound_run_length = mixing_time_bound(g, p.x(), plan.delta);
    if (plan.bound_run_length < 0x1.0p63) plan.run_length = static_cast<std::uint64_t>(plan.bound_run_length);
    plan.outer_reps = 7 * static_cast<std::uint64_t>(std::ceil(std::log(1.0 / eta))) + 1;
    plan.inner_reps = 20 * static_cast<std::uint64_t>(std::ceil(plan.witness / (epsilon * epsilon) + 1.0));
    return plan;
}

namespace detail {

/// Indicator of `event` after `steps` steps from the empty set, on stream (seed, outer, inner).
inline bool sample_indicator(const Sampler& sampler, const Event& event, std::uint64_t steps, std::uint64_t seed,
                             std::uint64_t outer, std::uint64_t inner) {
    Engine rng = stream_engine(seed, outer, inner);
    WormState s(sampler.graph());
    sampler.advance(s, steps, rng);
    return event.contains(s);
}

inline unsigned resolve_threads(unsigned threads) {
    if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
    return threads;
}

/// Runs `count` indicator samples for outer index `outer`; independent of thread count.
inline std::uint64_t count_hits(const Graph& g, const ChainParams& p, const Event& event, std::uint64_t steps,
                                std::uint64_t count, std::uint64_t seed, std::uint64_t outer, unsigned threads) {
    threads = static_cast<unsigned>(std::min<std::uint64_t>(resolve_threads(threads), count));
    const Sampler sampler(g, p);
    if (threads <= 1) {
        std::uint64_t hits = 0;
        for (std::uint64_t i = 0; i < count; ++i) hits += sample_indicator(sampler, event, steps, seed, outer, i);
        return hits;
    }
    std::vector<std::uint64_t> partial(threads, 0);
    {
        std::vector<std::jthread> pool;
        for (unsigned t = 0; t < threads; ++t)
            pool.emplace_back([&, t] {
                for (std::uint64_t i = t; i < count; i += threads)
                    partial[t] += sample_indicator(sampler, event, steps, seed, outer, i);
            });
    }
    std::uint64_t hits = 0;
    for (std::uint64_t h : partial) hits += h;
    return hits;
}

}  // namespace detail

/// Mean of `samples` indicators, each from a fresh chain started at the empty set
/// and run for `steps` steps. Sample i uses stream (seed, outer, i).
inline double estimate_event_probability(const Graph& g, const ChainParams& p, const Event& event,
                                         std::uint64_t steps, std::uint64_t samples, std::uint64_t seed,
                                         std::uint64_t outer = 0, unsigned threads = 1) {
    if (samples == 0) throw std::invalid_argument("estimate needs at least one sample");
    const auto hits = detail::count_hits(g, p, event, steps, samples, seed, outer, threads);
    return static_cast<double>(hits) / static_cast<double>(samples);
}

struct FprasResult {
    double estimate = 0;
    std::vector<double> sample_means;
};

/// Median of J sample means of I indicators each.
inline FprasResult fpras(const Graph& g, const ChainParams& p, const FprasPlan& plan, std::uint64_t seed,
                         unsigned threads = 1) {
    if (!plan.run_length) throw std::overflow_error("run length exceeds 64-bit range; override it or shrink the graph");
    if (plan.outer_reps == 0 || plan.inner_reps == 0) throw std::invalid_argument("empty fpras plan");
    FprasResult result;
    result.sample_means.reserve(plan.outer_reps);
    for (std::uint64_t j = 0; j < plan.outer_reps; ++j)
        result.sample_means.push_back(
            estimate_event_probability(g, p, plan.event, *plan.run_length, plan.inner_reps, seed, j, threads));
    result.estimate = median(result.sample_means);
    return result;
}

/// Single long chain estimate of pi(event): discard `burn_in` steps then average over `steps` states.
inline double long_run_estimate(const Graph& g, const ChainParams& p, const Event& event, std::uint64_t burn_in,
                                std::uint64_t steps, Engine& rng) {
    if (steps == 0) throw std::invalid_argument("long run needs at least one step");
    const Sampler sampler(g, p);
    WormState s(g);
    sampler.advance(s, burn_in, rng);
    std::uint64_t hits = 0;
    for (std::uint64_t t = 0; t < steps; ++t) {
        sampler.step(s, rng);
        hits += event.contains(s);
    }
    return static_cast<double>(hits) / static_cast<double>(steps);
}

}  // namespace wormchain
