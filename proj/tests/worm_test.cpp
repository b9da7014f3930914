#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include <wormchain/oracle.hpp>
#include <wormchain/worm.hpp>

using namespace wormchain;

namespace {

EdgeSubset subset_of(const Graph& g, std::initializer_list<Edge> edges) {
    EdgeSubset s = g.empty_subset();
    for (const Edge& e : edges) s.set(g.edge_id(e.u, e.v));
    return s;
}

Graph star3() { return Graph(4, {{0, 1}, {0, 2}, {0, 3}}); }

// |observed - expected| within k binomial standard deviations
void expect_binomial(std::uint64_t hits, std::uint64_t trials, double p, double k = 4.0) {
    const double mean = static_cast<double>(trials) * p;
    const double sd = std::sqrt(static_cast<double>(trials) * p * (1 - p));
    EXPECT_LE(std::abs(static_cast<double>(hits) - mean), k * sd + 1e-9)
        << "hits " << hits << " of " << trials << ", p = " << p;
}

// Generator that always returns the largest word, so every acceptance draw fails.
struct SaturatedGen {
    using result_type = std::uint64_t;
    std::uint64_t operator()() { return ~std::uint64_t{0}; }
};

}  // namespace

TEST(ChainParams, Validation) {
    EXPECT_NEAR(ChainParams::from_beta(std::atanh(0.5)).x(), 0.5, 1e-15);
    EXPECT_NEAR(ChainParams::from_x(0.5).beta(), std::atanh(0.5), 1e-15);
    EXPECT_THROW(ChainParams::from_x(1.5), std::domain_error);
    EXPECT_THROW(ChainParams::from_x(0.0), std::domain_error);
    EXPECT_THROW(ChainParams::from_x(1.0), std::domain_error);
    EXPECT_THROW(ChainParams::from_beta(-1.0), std::domain_error);
    EXPECT_THROW(ChainParams::from_beta(100.0), std::domain_error);
}

TEST(WormState, FromEdges) {
    const Graph k4 = complete_graph(4);
    const auto s = WormState::from_edges(k4, subset_of(k4, {{0, 1}, {1, 2}}));
    EXPECT_FALSE(s.in_c0());
    EXPECT_EQ(std::vector<Vertex>(s.defects().begin(), s.defects().end()), (std::vector<Vertex>{0, 2}));
    EXPECT_EQ(s.edge_count(), 2U);
    EXPECT_TRUE(s.consistent_with(k4));
    EXPECT_THROW(WormState::from_edges(k4, subset_of(k4, {{0, 1}, {2, 3}})), std::invalid_argument);
    EXPECT_TRUE(WormState::from_edges(k4, subset_of(k4, {{0, 1}, {1, 2}, {0, 2}})).in_c0());
}

TEST(WormState, FlipRejectsLeavingW) {
    const Graph k4 = complete_graph(4);
    auto s = WormState::from_edges(k4, subset_of(k4, {{0, 1}}));
    EXPECT_THROW(s.flip(2, 3, k4.edge_id(2, 3)), std::logic_error);
    s.flip(1, 2, k4.edge_id(1, 2));
    EXPECT_TRUE(s.is_defect(0));
    EXPECT_TRUE(s.is_defect(2));
    EXPECT_TRUE(s.consistent_with(k4));
}

TEST(Propose, K2FromEmpty) {
    const Graph k2 = complete_graph(2);
    const WormState s(k2);
    Engine rng(1);
    std::uint64_t from_zero = 0;
    const std::uint64_t trials = 1'000'000;
    for (std::uint64_t i = 0; i < trials; ++i) {
        const Move mv = propose(k2, s, rng);
        EXPECT_EQ(mv.v, 1 - mv.u);
        from_zero += mv.u == 0;
    }
    expect_binomial(from_zero, trials, 0.5);
}

TEST(Propose, K3FromSingleEdge) {
    const Graph k3 = complete_graph(3);
    const auto s = WormState::from_edges(k3, subset_of(k3, {{0, 1}}));
    Engine rng(2);
    std::map<std::pair<Vertex, Vertex>, std::uint64_t> counts;
    const std::uint64_t trials = 1'000'000;
    for (std::uint64_t i = 0; i < trials; ++i) {
        const Move mv = propose(k3, s, rng);
        ++counts[{mv.u, mv.v}];
    }
    ASSERT_EQ(counts.size(), 4U);
    for (auto [uv, c] : counts) {
        EXPECT_TRUE(uv.first == 0 || uv.first == 1);
        expect_binomial(c, trials, 0.25);
    }
}

TEST(Acceptance, RegularGraph) {
    const Graph c5 = cycle_graph(5);
    const auto p = ChainParams::from_x(0.3);
    const WormState empty(c5);
    EXPECT_DOUBLE_EQ(acceptance(c5, empty, 0, 1, p), 0.15);
    const auto s = WormState::from_edges(c5, subset_of(c5, {{0, 1}}));
    EXPECT_DOUBLE_EQ(acceptance(c5, s, 0, 1, p), 0.5);
    EXPECT_DOUBLE_EQ(acceptance(c5, s, 1, 2, p), 0.15);
    EXPECT_THROW(acceptance(c5, s, 0, 2, p), std::invalid_argument);
}

TEST(Acceptance, DegreeRatioOnStar) {
    const Graph g = star3();
    const auto s = WormState::from_edges(g, subset_of(g, {{0, 1}}));
    EXPECT_DOUBLE_EQ(acceptance(g, s, 0, 2, ChainParams::from_x(0.1)), 0.5 * 3 * 0.1);
    EXPECT_DOUBLE_EQ(acceptance(g, s, 0, 2, ChainParams::from_x(0.5)), 0.5);
    // closing the worm uses the plain rule
    EXPECT_DOUBLE_EQ(acceptance(g, s, 1, 0, ChainParams::from_x(0.5)), 0.5);
    // leaf defect retreating onto the centre: ratio 1/3, removal
    const auto t = WormState::from_edges(g, subset_of(g, {{0, 1}, {0, 2}}));
    EXPECT_NEAR(acceptance(g, t, 1, 0, ChainParams::from_x(0.5)), 0.5 * (1.0 / 3.0) * 2.0, 1e-15);
}

TEST(Acceptance, NeverAboveHalf) {
    const Graph g = grid_graph(2, 3);
    for (double x : {0.05, 0.5, 0.95}) {
        const auto p = ChainParams::from_x(x);
        const auto d = oracle::enumerate(g, x);
        for (auto a : d.states) {
            const auto s = WormState::from_edges(g, EdgeSubset::from_mask(g.edge_count(), a));
            for (Vertex u = 0; u < g.vertex_count(); ++u)
                for (Vertex v : g.neighbors(u)) {
                    const double acc = acceptance(g, s, u, v, p);
                    EXPECT_GT(acc, 0.0);
                    EXPECT_LE(acc, 0.5);
                }
        }
    }
}

TEST(Step, K2OneStepLaw) {
    const Graph k2 = complete_graph(2);
    const auto p = ChainParams::from_x(0.5);
    Engine rng(3);
    std::uint64_t moved = 0;
    const std::uint64_t trials = 1'000'000;
    for (std::uint64_t i = 0; i < trials; ++i) {
        WormState s(k2);
        const bool accepted = step(k2, s, p, rng);
        moved += accepted;
        EXPECT_EQ(s.edge_count(), accepted ? 1U : 0U);
    }
    expect_binomial(moved, trials, 0.25);
}

TEST(Step, RejectedDrawsLeaveStateUnchanged) {
    const Graph g = grid_graph(2, 3);
    const Sampler sampler(g, ChainParams::from_x(0.9));
    auto s = WormState::from_edges(g, subset_of(g, {{0, 1}, {1, 2}}));
    const auto before = s;
    SaturatedGen gen;
    for (int i = 0; i < 1000; ++i) EXPECT_FALSE(sampler.step(s, gen));
    EXPECT_EQ(s, before);
}

TEST(Step, OneStepLawMatchesTransitionRow) {
    const Graph g = grid_graph(2, 3);
    const double x = 0.5;
    const auto d = oracle::enumerate(g, x);
    const auto t = oracle::transition_matrix(g, d);
    const Sampler sampler(g, ChainParams::from_x(x));
    const std::uint64_t trials = 1'000'000;
    Engine rng(4);
    for (auto start : {oracle::SubsetMask{0}, oracle::SubsetMask{0b11}, oracle::SubsetMask{0b1010}}) {
        const EdgeSubset a = EdgeSubset::from_mask(g.edge_count(), start);
        if (boundary(g, a).size() > 2) continue;
        std::map<std::uint64_t, std::uint64_t> counts;
        for (std::uint64_t i = 0; i < trials; ++i) {
            auto s = WormState::from_edges(g, a);
            sampler.step(s, rng);
            ++counts[s.edges().to_mask()];
        }
        for (auto to : d.states) {
            const double p = t(start, to);
            const std::uint64_t c = counts.count(to) ? counts[to] : 0;
            if (p == 0.0) {
                EXPECT_EQ(c, 0U);
            } else {
                expect_binomial(c, trials, p);
            }
        }
    }
}

TEST(Sampler, BitIdenticalToReferenceStep) {
    for (const char* spec : {"k2", "k3", "k5", "path4", "grid2x3", "grid3x4", "torus4x5"}) {
        const Graph g = generate(spec);
        for (double x : {0.1, 0.5, 0.93}) {
            const auto p = ChainParams::from_x(x);
            const Sampler sampler(g, p);
            Engine ra(99), rb(99);
            WormState a(g), b(g);
            for (int i = 0; i < 200'000; ++i) {
                const bool acc_a = step(g, a, p, ra);
                const bool acc_b = sampler.step(b, rb);
                ASSERT_EQ(acc_a, acc_b) << spec << " step " << i;
                ASSERT_EQ(a, b) << spec << " step " << i;
                ASSERT_EQ(a.in_c0(), b.in_c0());
                ASSERT_EQ(a.edge_count(), b.edge_count());
                if (!a.in_c0()) {
                    ASSERT_EQ(a.defects()[0], b.defects()[0]);
                    ASSERT_EQ(a.defects()[1], b.defects()[1]);
                }
            }
            EXPECT_EQ(ra, rb) << spec;
        }
    }
}

TEST(Run, ZeroSteps) {
    const Graph g = complete_graph(3);
    Engine rng(5);
    auto s = WormState::from_edges(g, subset_of(g, {{0, 1}}));
    std::vector<std::uint64_t> seen;
    const RunStats st = run(g, s, 0, ChainParams::from_x(0.5), rng,
                            [&](std::uint64_t t, const WormState&) { seen.push_back(t); });
    EXPECT_EQ(st.samples, 1U);
    EXPECT_EQ(st.steps, 0U);
    EXPECT_EQ(st.time_in_c0, 0U);
    EXPECT_EQ(st.pair_count(0, 1), 1U);
    EXPECT_EQ(st.edge_count_trace, (std::vector<std::uint32_t>{1}));
    EXPECT_EQ(seen, (std::vector<std::uint64_t>{0}));
}

TEST(Run, DeterministicForFixedSeed) {
    const Graph g = torus_graph(4, 4);
    const auto p = ChainParams::from_x(0.4);
    auto once = [&] {
        Engine rng(77);
        WormState s(g);
        return run(g, s, 100'000, p, rng, RunOptions{.stride = 7});
    };
    const RunStats a = once();
    const RunStats b = once();
    EXPECT_EQ(a.edge_count_trace, b.edge_count_trace);
    EXPECT_EQ(a.pair_counts, b.pair_counts);
    EXPECT_EQ(a.accepted, b.accepted);
    EXPECT_EQ(a.edge_count_trace.size(), 100'000U / 7 + 1);
}

TEST(Run, CountsAreConsistent) {
    const Graph g = grid_graph(3, 3);
    Engine rng(8);
    WormState s(g);
    const RunStats st = run(g, s, 50'000, ChainParams::from_x(0.6), rng, RunOptions{.check_boundary = true});
    std::uint64_t pairs = 0;
    for (auto c : st.pair_counts) pairs += c;
    EXPECT_EQ(pairs + st.time_in_c0, st.samples);
    EXPECT_EQ(st.samples, 50'001U);
    EXPECT_TRUE(s.consistent_with(g));
}

TEST(Run, ClosureAndCacheOnLargerGraph) {
    const Graph g = torus_graph(5, 6);
    Engine rng(9);
    WormState s(g);
    const auto p = ChainParams::from_x(0.7);
    for (int i = 0; i < 100'000; ++i) {
        step(g, s, p, rng);
        ASSERT_TRUE(s.defects().size() == 0 || s.defects().size() == 2);
        ASSERT_TRUE(s.consistent_with(g));
    }
}

TEST(Run, K3FractionInC0) {
    const Graph g = complete_graph(3);
    const auto p = ChainParams::from_x(0.5);
    Engine rng(10);
    WormState s(g);
    // batch means absorb the autocorrelation of consecutive states
    const int batches = 100;
    const std::uint64_t per_batch = 10'000;
    std::vector<double> means;
    for (int b = 0; b < batches; ++b) means.push_back(run(g, s, per_batch - 1, p, rng).fraction_c0());
    double mean = 0;
    for (double m : means) mean += m;
    mean /= batches;
    double var = 0;
    for (double m : means) var += (m - mean) * (m - mean);
    var /= batches - 1;
    const double sd = std::sqrt(var / batches);
    EXPECT_NEAR(mean, 3.0 / 7.0, 4 * sd);
}
