#pragma once

#include <nlohmann/json.hpp>

#include <bit>
#include <string>

#include "flows.hpp"
#include "measure.hpp"
#include "oracle.hpp"
#include "verification.hpp"

// JSON views of the report types. Subsets are written as lists of [u, v] edges.

namespace wormchain {

inline nlohmann::json subset_json(const Graph& g, std::uint64_t mask) {
    auto out = nlohmann::json::array();
    for (EdgeId e = 0; e < g.edge_count() && e < 64; ++e)
        if ((mask >> e) & 1U) out.push_back({g.edge(e).u, g.edge(e).v});
    return out;
}

inline nlohmann::json vertex_set_json(std::uint64_t mask) {
    auto out = nlohmann::json::array();
    while (mask != 0) {
        out.push_back(std::countr_zero(mask));
        mask &= mask - 1;
    }
    return out;
}

inline nlohmann::json to_json(const VerificationRecord& rec) {
    auto checks = nlohmann::json::array();
    for (const Check& c : rec.checks) {
        nlohmann::json j{{"name", c.name}, {"passed", c.passed}, {"lhs", c.lhs}, {"rhs", c.rhs}};
        if (!c.detail.empty()) j["detail"] = c.detail;
        checks.push_back(std::move(j));
    }
    return {{"all_passed", rec.all_passed()}, {"checks", std::move(checks)}};
}

inline nlohmann::json to_json(const FprasPlan& plan) {
    nlohmann::json j{{"event", plan.event.kind == Event::Kind::c0 ? "C0" : "Cuv"},
                     {"epsilon", plan.epsilon},
                     {"eta", plan.eta},
                     {"S", plan.witness},
                     {"delta", plan.delta},
                     {"R_bound", plan.bound_run_length},
                     {"R", plan.run_length ? nlohmann::json(*plan.run_length) : nlohmann::json(nullptr)},
                     {"R_overridden", plan.run_length_overridden},
                     {"J", plan.outer_reps},
                     {"I", plan.inner_reps}};
    if (plan.event.kind == Event::Kind::pair) {
        j["u"] = plan.event.u;
        j["v"] = plan.event.v;
        j["k"] = plan.k;
    }
    return j;
}

inline nlohmann::json to_json(const oracle::MixingReport& r) {
    auto mix = nlohmann::json::array();
    for (const auto& [dl, t] : r.mixing_times) mix.push_back({{"delta", dl}, {"mix", t}});
    return {{"tv_curve", r.tv_curve},
            {"mixing_times", std::move(mix)},
            {"second_eigenvalue", r.second_eigenvalue},
            {"slem", r.slem},
            {"relaxation_time", r.relaxation_time}};
}

inline nlohmann::json to_json(const oracle::ExactDistribution& d) {
    auto classes = nlohmann::json::array();
    for (const auto& [w, lw] : d.class_weights) classes.push_back({{"W", vertex_set_json(w)}, {"lambda", lw}});
    std::size_t c0 = 0;
    for (oracle::SubsetMask a : d.states) c0 += d.boundary[a] == 0;
    auto corr = nlohmann::json::array();
    for (Vertex u = 0; u < d.n; ++u)
        for (Vertex v = u + 1; v < d.n; ++v)
            corr.push_back({{"u", u}, {"v", v}, {"two_point", oracle::exact_two_point(d, u, v)}});
    return {{"n", d.n},
            {"m", d.m},
            {"x", d.x},
            {"states", d.states.size()},
            {"states_c0", c0},
            {"lambda_c0", d.lambda_c0()},
            {"Lambda_W", d.lambda_w},
            {"Lambda_W_C4", d.lambda_w_c4},
            {"pi_c0", d.pi_c0()},
            {"pi_min", d.pi_min()},
            {"chi", oracle::exact_chi(d)},
            {"class_weights", std::move(classes)},
            {"two_point", std::move(corr)}};
}

inline nlohmann::json to_json(const Graph& g, const flows::TransitionLoad& t) {
    return {{"from", subset_json(g, t.from)}, {"to", subset_json(g, t.to)}, {"load", t.load}, {"pairs", t.pairs}};
}

inline nlohmann::json to_json(const Graph& g, const flows::CongestionReport& r) {
    auto top = nlohmann::json::array();
    for (const auto& t : r.top_loads) top.push_back(to_json(g, t));
    return {{"x", r.x},
            {"n", r.n},
            {"m", r.m},
            {"max_degree", r.max_degree},
            {"pairs", r.pair_count},
            {"max_path_length", r.max_path_length},
            {"max_load", r.max_transition.load},
            {"max_transition", to_json(g, r.max_transition)},
            {"congestion", r.congestion},
            {"bound", r.bound},
            {"loaded_transitions", r.loaded_transitions},
            {"top_loads", std::move(top)}};
}

inline nlohmann::json to_json(const Graph& g, const flows::BoundChainReport& r) {
    return {{"delta", r.delta},
            {"congestion", to_json(g, r.congestion)},
            {"mix", r.mixing_time},
            {"flow_first", r.flow_first},
            {"flow_second", r.flow_second},
            {"mix_bound", r.mix_bound},
            {"incidences", r.incidences},
            {"verification", to_json(r.record)}};
}

inline nlohmann::json to_json(const oracle::OracleReport& r) {
    auto bounds = nlohmann::json::array();
    for (const auto& [dl, b] : r.mix_bounds) bounds.push_back({{"delta", dl}, {"bound", b}});
    return {{"distribution", to_json(r.dist)},
            {"chain",
             {{"stationarity_error", r.chain.stationarity_error},
              {"detailed_balance_error", r.chain.detailed_balance_error},
              {"row_sum_error", r.chain.row_sum_error},
              {"min_diagonal", r.chain.min_diagonal},
              {"min_positive_off_diagonal", r.chain.min_positive_off_diagonal}}},
            {"mixing", to_json(r.mixing)},
            {"mix_bounds", std::move(bounds)},
            {"verification", to_json(r.record)}};
}

}  // namespace wormchain
