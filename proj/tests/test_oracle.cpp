#include <gtest/gtest.h>

#include "kmatch/augment.hpp"
#include "kmatch/blossom.hpp"
#include "kmatch/generate.hpp"
#include "kmatch/oracle.hpp"

using namespace kmatch;

namespace {

MultiGraph make(std::size_t n, std::vector<VertexPair> e) { return MultiGraph::from_edge_list(n, e); }

MultiGraph complete(std::size_t n) {
    std::vector<VertexPair> e;
    for (Vertex u = 0; u < n; ++u)
        for (Vertex v = u + 1; v < n; ++v) e.emplace_back(u, v);
    return make(n, e);
}

MultiGraph random_multigraph(Rng& rng, std::uint64_t max_n, std::uint64_t max_m) {
    const auto n = 2 + rng.below(max_n - 1);
    const auto m = rng.below(max_m + 1);
    std::vector<VertexPair> e;
    for (std::uint64_t i = 0; i < m; ++i) e.emplace_back(Vertex(rng.below(n)), Vertex(rng.below(n)));
    return make(n, e);
}

// Maximum matching size by subset enumeration over distinct pairs.
std::size_t brute_matching(const MultiGraph& g) { return brute_force_max_k_matching(g, 1).size; }

} // namespace

TEST(BruteForce, Examples) {
    EXPECT_EQ(brute_force_max_k_matching(make(4, {}), 2).size, 0u);
    auto c3 = make(3, {{0, 1}, {1, 2}, {2, 0}});
    EXPECT_EQ(brute_force_max_k_matching(c3, 1).size, 1u);
    auto k4 = brute_force_max_k_matching(complete(4), 2);
    EXPECT_EQ(k4.size, 4u);
    EXPECT_TRUE(verify_k_factor(complete(4), {}, k4.witness, 2));
}

TEST(BruteForce, IgnoresLoopsAndParallelCopies) {
    auto g = make(2, {{0, 1}, {0, 1}, {0, 0}, {1, 1}});
    EXPECT_EQ(brute_force_max_k_matching(g, 2).size, 1u);
}

TEST(BruteForce, RefusesLargeInstances) {
    EXPECT_THROW(brute_force_max_k_matching(complete(9), 2), std::invalid_argument);
}

TEST(Verify, EmptyMatching) {
    auto g = complete(4);
    EXPECT_TRUE(verify_k_matching(g, {}, {}, 2));
    EXPECT_FALSE(verify_k_factor(g, {}, {}, 2));
    EXPECT_TRUE(verify_k_factor(make(0, {}), {}, {}, 2));
}

TEST(Verify, FourCycleIsTwoFactorOfK4) {
    EXPECT_TRUE(verify_k_factor(complete(4), {}, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}, 2));
}

TEST(Verify, ReportsForeignEdge) {
    auto g = make(4, {{0, 1}, {2, 3}});
    auto r = verify_k_matching(g, {}, {{0, 1}, {1, 2}}, 2);
    EXPECT_FALSE(r);
    ASSERT_TRUE(r.offending.has_value());
    EXPECT_EQ(*r.offending, VertexPair(1, 2));
    EXPECT_TRUE(verify_k_matching(g, {{1, 2}}, {{0, 1}, {1, 2}}, 2));
}

TEST(Verify, RejectsLoopsRepeatsAndOverfullVertices) {
    auto g = make(3, {{0, 1}, {0, 1}, {1, 2}, {0, 2}, {1, 1}});
    EXPECT_FALSE(verify_k_matching(g, {}, {{1, 1}}, 2));
    EXPECT_FALSE(verify_k_matching(g, {}, {{0, 1}, {1, 0}}, 2));
    auto r = verify_k_matching(g, {}, {{0, 1}, {1, 2}}, 1);
    EXPECT_FALSE(r);
    EXPECT_EQ(r.offending_vertex, std::optional<Vertex>(1));
}

TEST(Verify, ExcludedVertexMustBeUnmatched) {
    auto k3 = complete(3);
    EXPECT_TRUE(verify_k_factor(k3, {}, {{1, 2}}, 1, Vertex{0}));
    EXPECT_FALSE(verify_k_factor(k3, {}, {{0, 1}}, 1, Vertex{0}));
}

TEST(NaiveCore, Examples) {
    EXPECT_TRUE(naive_k_core(make(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}}), 2).empty());
    EXPECT_EQ(naive_k_core(make(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}}), 2).size(), 5u);
    EXPECT_EQ(naive_k_core(make(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}}), 2).size(), 4u);
}

TEST(GeneralMatcher, MatchesBruteForceOnRandomGraphs) {
    for (std::uint64_t i = 0; i < 3000; ++i) {
        Rng rng = Rng(21).fork(i);
        auto g = random_multigraph(rng, 12, 18);
        const auto pairs = distinct_pairs(g);
        if (pairs.size() > 24) continue;
        GeneralMatcher gm(int(g.num_vertices()));
        for (auto [u, v] : pairs) gm.add_edge(int(u), int(v));
        ASSERT_EQ(gm.maximize(), brute_matching(g)) << "case " << i;
    }
}

TEST(GeneralMatcher, OddCycleNeedsBlossom) {
    // Triangle 0-1-2 with a path 0-4-3 and a pendant 5 at 2; the optimum is 3.
    GeneralMatcher gm(6);
    for (auto [u, v] : std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 0}, {3, 4}, {4, 0}, {2, 5}}) gm.add_edge(u, v);
    gm.set_mate(0, 1);
    EXPECT_EQ(gm.maximize(), 3u);
}

TEST(Gadget, ExhaustiveMatchesBruteForce) {
    for (std::uint64_t i = 0; i < 2000; ++i) {
        Rng rng = Rng(22).fork(i);
        auto g = random_multigraph(rng, 10, 16);
        const int k = 1 + int(rng.below(3));
        const auto opt = brute_force_max_k_matching(g, k).size;
        auto m = exhaustive_augment(g, k, {});
        ASSERT_EQ(m.size(), opt) << "case " << i;
        ASSERT_TRUE(verify_k_matching(g, {}, m, k)) << "case " << i;
    }
}

TEST(Gadget, StartsFromAnyValidMatching) {
    for (std::uint64_t i = 0; i < 500; ++i) {
        Rng rng = Rng(23).fork(i);
        auto g = random_multigraph(rng, 10, 16);
        const int k = 1 + int(rng.below(3));
        // A greedy start.
        KMatching m(g.num_vertices(), k);
        for (auto [u, v] : distinct_pairs(g))
            if (m.deficient(u) && m.deficient(v) && rng.bernoulli(0.5)) m.add(u, v);
        auto best = exhaustive_augment(g, k, m.edges());
        ASSERT_EQ(best.size(), brute_force_max_k_matching(g, k).size) << "case " << i;
    }
}

TEST(Gadget, ExcludedVertexStaysUnmatched) {
    for (std::uint64_t i = 0; i < 500; ++i) {
        Rng rng = Rng(24).fork(i);
        auto g = random_multigraph(rng, 9, 14);
        const int k = 1 + int(rng.below(2));
        const Vertex z = Vertex(rng.below(g.num_vertices()));
        std::vector<VertexPair> kept;
        for (auto [u, v] : g.edge_list())
            if (u != z && v != z) kept.emplace_back(u, v);
        auto without = make(g.num_vertices(), kept);
        auto m = exhaustive_augment(g, k, {}, z);
        for (auto [u, v] : m) ASSERT_TRUE(u != z && v != z);
        ASSERT_EQ(m.size(), brute_force_max_k_matching(without, k).size);
    }
}

TEST(Gadget, SmallExamples) {
    EXPECT_EQ(exhaustive_augment(make(3, {{0, 1}, {1, 2}, {2, 0}}), 1, {}).size(), 1u);
    EXPECT_EQ(exhaustive_augment(complete(4), 2, {}).size(), 4u);
}
