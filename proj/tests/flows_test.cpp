#include <gtest/gtest.h>

#include <map>
#include <set>

#include <wormchain/flows.hpp>

using namespace wormchain;
using flows::SubsetMask;

namespace {

SubsetMask mask_of(const Graph& g, std::initializer_list<Edge> edges) {
    SubsetMask m = 0;
    for (const Edge& e : edges) m |= SubsetMask{1} << g.edge_id(e.u, e.v);
    return m;
}

}  // namespace

TEST(CanonicalPath, K2SingleStep) {
    const Graph g = complete_graph(2);
    const auto p = flows::canonical_path(g, 1, 0);
    EXPECT_EQ(p.length(), 1U);
    EXPECT_EQ(p.states, (std::vector<SubsetMask>{1, 0}));
    EXPECT_EQ(p.defect_path, (std::vector<Vertex>{0, 1}));
    EXPECT_TRUE(p.cycles.empty());
}

TEST(CanonicalPath, K3DefectPathThroughThirdVertex) {
    const Graph g = complete_graph(3);
    const SubsetMask i = mask_of(g, {{0, 1}});
    const SubsetMask f = mask_of(g, {{0, 1}, {0, 2}, {1, 2}});
    const auto p = flows::canonical_path(g, i, f);
    EXPECT_EQ(p.defect_path, (std::vector<Vertex>{0, 2, 1}));
    EXPECT_EQ(p.flips, (std::vector<EdgeId>{g.edge_id(0, 2), g.edge_id(1, 2)}));
    EXPECT_TRUE(p.cycles.empty());
    const auto t = oracle::transition_matrix(g, 0.5);
    for (std::size_t k = 0; k < p.length(); ++k) EXPECT_GT(t(p.states[k], p.states[k + 1]), 0.0);
}

TEST(CanonicalPath, GridDefectEdgeThenSquare) {
    // I xor F = edge 1-4 plus the square 3-4-7-6 of the 3x3 grid
    const Graph g = grid_graph(3, 3);
    const SubsetMask i = mask_of(g, {{1, 4}, {3, 4}, {4, 7}, {6, 7}, {3, 6}});
    const auto p = flows::canonical_path(g, i, 0);
    EXPECT_EQ(p.defect_path, (std::vector<Vertex>{1, 4}));
    ASSERT_EQ(p.cycles.size(), 1U);
    EXPECT_EQ(p.cycles[0].vertices, (std::vector<Vertex>{3, 4, 7, 6}));
    EXPECT_EQ(p.flips, (std::vector<EdgeId>{g.edge_id(1, 4), g.edge_id(3, 4), g.edge_id(4, 7), g.edge_id(6, 7),
                                             g.edge_id(3, 6)}));
    for (SubsetMask s : p.states) EXPECT_LE(boundary(g, flows::to_subset(g, s)).size(), 2U);
    EXPECT_EQ(p.states.back(), 0U);
}

TEST(CanonicalPath, RejectsWrongClasses) {
    const Graph g = complete_graph(3);
    EXPECT_THROW(flows::canonical_path(g, 0, 0), std::invalid_argument);
    EXPECT_THROW(flows::canonical_path(g, 1, 1), std::invalid_argument);
}

TEST(Eta, Endpoints) {
    const Graph g = complete_graph(4);
    const SubsetMask i = mask_of(g, {{0, 1}, {1, 2}});
    const SubsetMask f = mask_of(g, {{0, 1}, {1, 3}, {0, 3}});
    const auto p = flows::canonical_path(g, i, f);
    ASSERT_GE(p.length(), 1U);
    EXPECT_EQ(flows::eta(g, {p.states[0], p.states[1]}, i, f), f);
    const std::size_t last = p.length() - 1;
    EXPECT_EQ(flows::eta(g, {p.states[last], p.states[last + 1]}, i, f), i ^ f ^ p.states[last]);
    EXPECT_EQ(i ^ f ^ f, i);
    EXPECT_THROW(flows::eta(g, {p.states[1], p.states[0]}, i, f), std::invalid_argument);
}

TEST(Eta, ImageClassesAndInjectivityOnK4) {
    const Graph g = complete_graph(4);
    const auto d = oracle::enumerate(g, 0.5);
    std::map<std::pair<SubsetMask, SubsetMask>, std::set<SubsetMask>> images;
    std::size_t incidences = 0;
    flows::for_each_canonical_path(g, d, [&](const flows::CanonicalPath& p) {
        for (std::size_t k = 0; k < p.length(); ++k) {
            const SubsetMask image = p.initial ^ p.final ^ p.states[k];
            const std::size_t cls = boundary(g, flows::to_subset(g, image)).size();
            EXPECT_TRUE(cls == 0 || cls == 2 || cls == 4);
            images[{p.states[k], p.states[k + 1]}].insert(image);
            ++incidences;
        }
    });
    std::size_t distinct = 0;
    for (const auto& [e, s] : images) distinct += s.size();
    EXPECT_EQ(distinct, incidences);
}

TEST(Congestion, K2HandValue) {
    const auto r = flows::congestion(complete_graph(2), 0.5);
    EXPECT_NEAR(r.congestion, 2.0 / 1.5, 1e-14);
    EXPECT_DOUBLE_EQ(r.bound, 16.0);
    EXPECT_EQ(r.max_path_length, 1U);
    EXPECT_EQ(r.pair_count, 1U);
}

TEST(Congestion, K3WithinBound) {
    const auto r = flows::congestion(complete_graph(3), 0.5);
    EXPECT_DOUBLE_EQ(r.bound, 729.0);
    EXPECT_GT(r.congestion, 0.0);
    EXPECT_LE(r.congestion, 729.0);
    EXPECT_DOUBLE_EQ(r.congestion, static_cast<double>(r.max_path_length) * r.max_transition.load);
    for (const auto& t : r.top_loads) EXPECT_GT(t.load, 0.0);
}

TEST(Congestion, IndependentLoadComputation) {
    // recompute max load on cycle5 from paths and the transition matrix alone
    const Graph g = cycle_graph(5);
    const double x = 0.3;
    const auto d = oracle::enumerate(g, x);
    const auto t = oracle::transition_matrix(g, d);
    std::map<std::pair<SubsetMask, SubsetMask>, double> load;
    std::size_t longest = 0;
    flows::for_each_canonical_path(g, d, [&](const flows::CanonicalPath& p) {
        longest = std::max(longest, p.length());
        for (std::size_t k = 0; k < p.length(); ++k)
            load[{p.states[k], p.states[k + 1]}] +=
                d.pi_of(p.initial) * d.pi_of(p.final) / (d.pi_of(p.states[k]) * t(p.states[k], p.states[k + 1]));
    });
    double worst = 0;
    for (const auto& [e, l] : load) worst = std::max(worst, l);
    const auto r = flows::congestion(g, x);
    EXPECT_NEAR(r.congestion, static_cast<double>(longest) * worst, 1e-12 * r.congestion);
    EXPECT_EQ(r.loaded_transitions, load.size());
}

TEST(Congestion, CapExceeded) {
    EXPECT_THROW(flows::congestion(torus_graph(3, 5), 0.5), oracle::CapExceeded);
}

TEST(BoundChain, AllSmallGraphs) {
    for (const char* spec : {"k2", "k3", "k4", "path4", "cycle5", "grid2x3"})
        for (double x : {0.1, 0.5, 0.9}) {
            const auto r = flows::verify_bound_chain(generate(spec), x, 0.25);
            for (const Check& c : r.record.checks)
                EXPECT_TRUE(c.passed) << spec << " x=" << x << ": " << c.name << " lhs=" << c.lhs << " rhs=" << c.rhs
                                      << " " << c.detail;
            EXPECT_LE(static_cast<double>(r.mixing_time), r.flow_first);
            EXPECT_LE(r.flow_first, r.flow_second * (1 + 1e-12));
            EXPECT_GT(r.incidences, 0U);
        }
}
