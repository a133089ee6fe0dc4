#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "kmatch/graph.hpp"
#include "kmatch/matching.hpp"
#include "kmatch/rng.hpp"

using namespace kmatch;

namespace {

// |hits − np| within three binomial standard deviations.
void expect_frequency(std::size_t hits, std::size_t trials, double p) {
    const double mean = p * double(trials);
    const double sd = std::sqrt(double(trials) * p * (1 - p));
    EXPECT_NEAR(double(hits), mean, 3 * sd) << "p=" << p;
}

MultiGraph make(std::size_t n, std::vector<VertexPair> e) { return MultiGraph::from_edge_list(n, e); }

} // namespace

TEST(MultiGraph, EmptyGraph) {
    auto g = make(3, {});
    EXPECT_EQ(g.num_edges(), 0u);
    for (Vertex v = 0; v < 3; ++v) EXPECT_EQ(g.degree(v), 0u);
    EXPECT_TRUE(g.check_invariants());
}

TEST(MultiGraph, LoopCountsTwice) {
    auto g = make(1, {{0, 0}});
    EXPECT_EQ(g.degree(0), 2u);
    EXPECT_EQ(g.num_edges(), 1u);
}

TEST(MultiGraph, CompleteGraphDegrees) {
    std::vector<VertexPair> e;
    for (Vertex u = 0; u < 4; ++u)
        for (Vertex v = u + 1; v < 4; ++v) e.emplace_back(u, v);
    auto g = make(4, e);
    for (Vertex v = 0; v < 4; ++v) EXPECT_EQ(g.degree(v), 3u);
    EXPECT_EQ(g.max_degree(), 3u);
}

TEST(MultiGraph, SingleEdgeAlwaysChosen) {
    auto g = make(2, {{0, 1}});
    Rng rng(1);
    for (int i = 0; i < 100; ++i) EXPECT_EQ(g.random_incident(0, rng).second, 1u);
}

TEST(MultiGraph, IncidentDrawIsDegreeProportionalWithMultiEdges) {
    auto g = make(3, {{0, 1}, {0, 1}, {0, 2}});
    Rng rng(2);
    const std::size_t trials = 200000;
    std::size_t to_w = 0;
    for (std::size_t i = 0; i < trials; ++i) to_w += g.random_incident(0, rng).second == 1;
    expect_frequency(to_w, trials, 2.0 / 3.0);
}

TEST(MultiGraph, LoopHasTwoEndsAtItsVertex) {
    auto g = make(2, {{0, 0}, {0, 1}});
    Rng rng(3);
    const std::size_t trials = 200000;
    std::size_t loop = 0;
    for (std::size_t i = 0; i < trials; ++i) loop += g.random_incident(0, rng).second == 0;
    expect_frequency(loop, trials, 2.0 / 3.0);
}

TEST(MultiGraph, DeleteOnlyEdge) {
    auto g = make(2, {{0, 1}});
    g.delete_edge(g.live_edges().front());
    EXPECT_EQ(g.num_edges(), 0u);
    EXPECT_EQ(g.degree(0), 0u);
    EXPECT_EQ(g.degree(1), 0u);
    EXPECT_TRUE(g.check_invariants());
}

TEST(MultiGraph, DeleteAllIncidentOnStarCentre) {
    auto g = make(4, {{0, 1}, {0, 2}, {0, 3}});
    auto removed = g.delete_all_incident(0);
    EXPECT_EQ(removed.size(), 3u);
    for (Vertex v = 0; v < 4; ++v) EXPECT_EQ(g.degree(v), 0u);
    for (auto e : removed) EXPECT_FALSE(g.alive(e));
    EXPECT_TRUE(g.check_invariants());
}

TEST(MultiGraph, DeleteOneCopyOfDoubleEdge) {
    auto g = make(2, {{0, 1}, {0, 1}});
    auto edges = g.live_edges();
    g.delete_edge(edges[0]);
    EXPECT_EQ(g.num_edges(), 1u);
    EXPECT_TRUE(g.alive(edges[1]));
    EXPECT_EQ(g.degree(0), 1u);
    EXPECT_EQ(g.degree(1), 1u);
}

TEST(MultiGraph, DeletingDeadEdgeThrows) {
    auto g = make(2, {{0, 1}});
    auto e = g.live_edges().front();
    g.delete_edge(e);
    EXPECT_THROW(g.delete_edge(e), std::exception);
}

TEST(MultiGraph, RandomDeletionsKeepInvariants) {
    Rng rng(4);
    std::vector<VertexPair> e;
    for (int i = 0; i < 300; ++i) e.emplace_back(Vertex(rng.below(40)), Vertex(rng.below(40)));
    auto g = make(40, e);
    std::size_t expected_degree_sum = 600;
    while (g.num_edges() > 0) {
        auto live = g.live_edges();
        auto victim = live[rng.below(live.size())];
        g.delete_edge(victim);
        expected_degree_sum -= 2;
        std::size_t s = 0;
        for (Vertex v = 0; v < 40; ++v) s += g.degree(v);
        ASSERT_EQ(s, expected_degree_sum);
        ASSERT_TRUE(g.check_invariants());
    }
}

TEST(MultiGraph, EdgeListRoundTrip) {
    std::vector<VertexPair> e{{0, 1}, {1, 1}, {2, 0}, {0, 1}};
    auto g = make(3, e);
    auto back = g.edge_list();
    std::multiset<std::uint64_t> a, b;
    for (auto [u, v] : e) a.insert(pair_key(u, v));
    for (auto [u, v] : back) b.insert(pair_key(u, v));
    EXPECT_EQ(a, b);
}

TEST(MultiGraph, OutOfRangeEndpointRejected) {
    EXPECT_THROW(make(2, {{0, 2}}), std::exception);
}

TEST(PairKey, Symmetric) {
    EXPECT_EQ(pair_key(3, 9), pair_key(9, 3));
    EXPECT_NE(pair_key(3, 9), pair_key(3, 8));
}

TEST(Rng, DeterministicAndForksDiffer) {
    Rng a(11), b(11);
    for (int i = 0; i < 10; ++i) EXPECT_EQ(a(), b());
    Rng x = Rng(11).fork("tinf"), y = Rng(11).fork("augment"), z = Rng(11).fork("tinf");
    const auto xv = x(), yv = y(), zv = z();
    EXPECT_EQ(xv, zv);
    EXPECT_NE(xv, yv);
    EXPECT_NE(Rng(11).fork(std::uint64_t{1})(), Rng(11).fork(std::uint64_t{2})());
}

TEST(Rng, BelowIsUniform) {
    Rng rng(5);
    const std::size_t trials = 120000;
    std::vector<std::size_t> c(6, 0);
    for (std::size_t i = 0; i < trials; ++i) ++c[rng.below(6)];
    for (auto x : c) expect_frequency(x, trials, 1.0 / 6.0);
}

TEST(Rng, UniformInUnitInterval) {
    Rng rng(6);
    double sum = 0;
    for (int i = 0; i < 100000; ++i) {
        double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
    }
    EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}

TEST(KMatching, AddRemoveAndDegrees) {
    KMatching m(4, 2);
    m.add(0, 1);
    m.add(0, 2);
    EXPECT_EQ(m.size(), 2u);
    EXPECT_FALSE(m.deficient(0));
    EXPECT_TRUE(m.deficient(1));
    EXPECT_TRUE(m.contains(1, 0));
    EXPECT_THROW(m.add(0, 3), InvariantError);
    EXPECT_THROW(m.add(1, 0), InvariantError);
    EXPECT_THROW(m.add(3, 3), InvariantError);
    m.remove(1, 0);
    EXPECT_EQ(m.size(), 1u);
    EXPECT_THROW(m.remove(1, 0), InvariantError);
    EXPECT_EQ(m.total_deficiency(), 2u * 4 - 2);
}

TEST(KMatching, EdgesSortedAndNormalised) {
    auto m = KMatching::from_pairs(5, 1, {{3, 1}, {4, 0}});
    auto e = m.edges();
    ASSERT_EQ(e.size(), 2u);
    EXPECT_EQ(e[0], VertexPair(0, 4));
    EXPECT_EQ(e[1], VertexPair(1, 3));
}
