#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/tools/roots.hpp>

#include "kmatch/generate.hpp"
#include "kmatch/oracle.hpp"

using namespace kmatch;

namespace {

std::vector<std::size_t> degrees(const MultiGraph& g) {
    std::vector<std::size_t> d(g.num_vertices());
    for (Vertex v = 0; v < g.num_vertices(); ++v) d[v] = g.degree(v);
    return d;
}

// P(Po_{≥ℓ}(x) = r) from the boost Poisson law.
double trunc_pmf(int ell, int r, double x) {
    boost::math::poisson_distribution<double> po(x);
    return boost::math::pdf(po, r) / (ell == 0 ? 1.0 : boost::math::gamma_p(double(ell), x));
}

// Chi-square test at level 1%: bins from `floor` up, each closed once it expects
// at least 5; the last bin takes the whole remaining tail.
void expect_truncated_poisson_law(const std::vector<int>& sample, int floor, double x) {
    std::map<int, double> observed;
    for (int d : sample) observed[d] += 1;
    const double n = double(sample.size());
    std::vector<std::pair<double, double>> bins; // (observed, expected)
    double obs = 0.0, expect = 0.0, mass = 0.0;
    for (int r = floor;; ++r) {
        const double p = trunc_pmf(floor, r, x);
        mass += p;
        expect += n * p;
        obs += observed.count(r) ? observed[r] : 0.0;
        const double rest = n * std::max(0.0, 1.0 - mass);
        if (rest < 5.0) {
            for (const auto& [d, c] : observed)
                if (d > r) obs += c;
            bins.emplace_back(obs, expect + rest);
            break;
        }
        if (expect >= 5.0) {
            bins.emplace_back(obs, expect);
            obs = expect = 0.0;
        }
    }
    ASSERT_GE(bins.size(), 2u);
    double stat = 0.0;
    for (auto [o, e] : bins) stat += (o - e) * (o - e) / e;
    boost::math::chi_squared_distribution<double> chi(double(bins.size() - 1));
    EXPECT_LT(stat, boost::math::quantile(chi, 0.99)) << "bins=" << bins.size();
}

double oracle_lambda_floor3(double mean) {
    auto h = [&](double x) { return x * boost::math::gamma_p(2.0, x) / boost::math::gamma_p(3.0, x) - mean; };
    boost::math::tools::eps_tolerance<double> tol(50);
    auto [a, b] = boost::math::tools::bisect(h, 1e-6, 2.0 * mean, tol);
    return 0.5 * (a + b);
}

} // namespace

TEST(TruncatedPoisson, ZeroRateSitsAtFloor) {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        ASSERT_EQ(sample_truncated_poisson(0.0, 3, rng), 3);
        ASSERT_EQ(sample_truncated_poisson(1e-12, 3, rng), 3);
    }
}

TEST(TruncatedPoisson, FloorOneMassAtOne) {
    Rng rng(2);
    TruncatedPoisson tp(1.0, 1);
    const std::size_t trials = 200000;
    std::size_t ones = 0;
    for (std::size_t i = 0; i < trials; ++i) ones += tp(rng) == 1;
    const double p = 1.0 / (std::exp(1.0) - 1.0);
    EXPECT_NEAR(p, 0.5820, 1e-4);
    EXPECT_NEAR(double(ones), p * trials, 3 * std::sqrt(trials * p * (1 - p)));
    EXPECT_NEAR(tp.pmf()[0], p, 1e-12);
}

TEST(TruncatedPoisson, FloorZeroIsPoisson) {
    Rng rng(3);
    const std::size_t trials = 200000;
    double sum = 0;
    for (std::size_t i = 0; i < trials; ++i) sum += sample_truncated_poisson(2.0, 0, rng);
    EXPECT_NEAR(sum / trials, 2.0, 3 * std::sqrt(2.0 / trials));
}

TEST(TruncatedPoisson, LawMatchesChiSquare) {
    Rng rng(4);
    for (auto [x, ell] : std::vector<std::pair<double, int>>{{0.7, 3}, {2.5, 2}, {6.0, 4}}) {
        TruncatedPoisson tp(x, ell);
        std::vector<int> s(50000);
        for (auto& d : s) d = tp(rng);
        expect_truncated_poisson_law(s, ell, x);
    }
}

TEST(MinDegreeGraph, ForcedRegularSequence) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        auto g = sample_min_degree_graph(4, 6, 2, rng);
        for (auto d : degrees(g)) EXPECT_EQ(d, 3u);
        EXPECT_EQ(g.num_edges(), 6u);
    }
}

TEST(MinDegreeGraph, RejectsTooFewEdges) {
    Rng rng(1);
    EXPECT_THROW(sample_min_degree_graph(10, 14, 2, rng), InfeasibleError);
}

TEST(MinDegreeGraph, DegreeThreeShareAndMaxDegree) {
    const std::uint64_t n = 100000, m = 2 * n;
    Rng rng(5);
    GenerateStats st;
    auto g = sample_min_degree_graph(n, m, 2, rng, {}, &st);
    const double lambda = oracle_lambda_floor3(4.0);
    EXPECT_NEAR(st.lambda, lambda, 1e-6);
    std::size_t three = 0, total = 0;
    for (auto d : degrees(g)) {
        ASSERT_GE(d, 3u);
        three += d == 3;
        total += d;
    }
    EXPECT_EQ(total, 2 * m);
    const double expect = n * std::pow(lambda, 3) / 6.0 / (std::exp(lambda) * boost::math::gamma_p(3.0, lambda));
    EXPECT_LE(std::fabs(double(three) - expect), std::sqrt(double(n)) * std::pow(std::log(double(n)), 2));
    const double ln = std::log(double(n));
    EXPECT_LE(double(g.max_degree()), 10 * ln / std::log(ln));
}

TEST(MinDegreeGraph, SimpleSamplesAreSimple) {
    for (int k : {2, 3}) {
        Rng rng(6 + k);
        GenerateOptions go;
        go.simple = go.switching = true;
        auto g = sample_min_degree_graph(5000, static_cast<std::uint64_t>(((k + 1) / 2.0 + 0.5) * 5000), k, rng, go);
        EXPECT_TRUE(is_simple(g));
        for (auto d : degrees(g)) ASSERT_GE(d, std::size_t(k + 1));
    }
}

TEST(Switching, PreservesDegreesAndRemovesDefects) {
    Rng rng(8);
    std::vector<VertexPair> e;
    for (int i = 0; i < 2000; ++i) e.emplace_back(Vertex(rng.below(500)), Vertex(rng.below(500)));
    e.emplace_back(3, 3);
    e.emplace_back(4, 5);
    e.emplace_back(5, 4);
    const auto before = degrees(MultiGraph::from_edge_list(500, e));
    make_simple_by_switching(e, rng);
    auto g = MultiGraph::from_edge_list(500, e);
    EXPECT_TRUE(is_simple(g));
    EXPECT_EQ(degrees(g), before);
}

TEST(ConstrainedSequence, AllFreeMatchesMinDegreeSampler) {
    Rng a(9), b(9);
    auto g1 = sample_min_degree_graph(300, 600, 2, a);
    auto g2 = sample_constrained_sequence(DegreeConstraint::all_free(300, 2), 600, b);
    EXPECT_EQ(g1.edge_list(), g2.edge_list());
}

TEST(ConstrainedSequence, FixedDegreeCellIsExact) {
    auto dc = DegreeConstraint::empty(2);
    dc.L[2][1] = 1;
    dc.L[2][3] = 199;
    dc.y.assign(200, {2, 3});
    dc.y[0] = {2, 1};
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        Rng rng(seed);
        auto g = sample_constrained_sequence(dc, 400, rng);
        EXPECT_EQ(g.degree(0), 1u);
    }
}

TEST(ConstrainedSequence, DegreeSumAlwaysTwiceM) {
    auto dc = DegreeConstraint::empty(3);
    dc.L[0][0] = 10;
    dc.L[1][1] = 30;
    dc.L[1][2] = 200;
    dc.L[3][3] = 40;
    dc.L[3][4] = 500;
    Rng rng(10);
    for (int i = 0; i < 20; ++i) {
        auto deg = sample_degree_sequence(dc, 2000, rng);
        std::uint64_t s = 0;
        for (auto d : deg) s += d;
        ASSERT_EQ(s, 4000u);
    }
}

TEST(ConstrainedSequence, FreeCellFollowsTruncatedPoisson) {
    auto dc = DegreeConstraint::empty(2);
    dc.L[1][2] = 4000; // label 1, free at floor 2
    dc.L[2][3] = 4000; // label 2, free at floor 3
    dc.L[0][0] = 500;
    const auto cells = dc.cells();
    Rng rng(11);
    GenerateStats st;
    auto g = sample_constrained_sequence(dc, 15000, rng, {}, &st);
    std::vector<int> floor2, floor3;
    for (Vertex v = 0; v < g.num_vertices(); ++v) {
        if (cells[v] == std::pair<int, int>{1, 2}) floor2.push_back(int(g.degree(v)));
        if (cells[v] == std::pair<int, int>{2, 3}) floor3.push_back(int(g.degree(v)));
    }
    expect_truncated_poisson_law(floor2, 2, st.lambda);
    expect_truncated_poisson_law(floor3, 3, st.lambda);
}

TEST(Gnm, SimpleWithExactEdgeCount) {
    Rng rng(12);
    for (std::uint64_t m : {0ULL, 10ULL, 40ULL, 44ULL, 45ULL}) {
        auto g = gnm(10, m, rng);
        EXPECT_EQ(g.num_edges(), m);
        EXPECT_TRUE(is_simple(g));
    }
    EXPECT_THROW(gnm(10, 46, rng), InfeasibleError);
}

TEST(KCore, Examples) {
    auto p5 = MultiGraph::from_edge_list(5, std::vector<VertexPair>{{0, 1}, {1, 2}, {2, 3}, {3, 4}});
    EXPECT_TRUE(k_core_vertices(p5, 2).empty());
    auto c5 = MultiGraph::from_edge_list(5, std::vector<VertexPair>{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}});
    EXPECT_EQ(k_core_vertices(c5, 2).size(), 5u);
    auto k4e = MultiGraph::from_edge_list(4, std::vector<VertexPair>{{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}});
    EXPECT_EQ(k_core_vertices(k4e, 2), naive_k_core(k4e, 2));
    EXPECT_EQ(k_core_vertices(k4e, 2).size(), 4u);
    auto empty = MultiGraph::from_edge_list(6, std::vector<VertexPair>{});
    EXPECT_TRUE(k_core_vertices(empty, 1).empty());
}

TEST(KCore, AgreesWithNaiveFixpointOnMultigraphs) {
    for (std::uint64_t i = 0; i < 300; ++i) {
        Rng rng = Rng(13).fork(i);
        const auto n = 3 + rng.below(40);
        std::vector<VertexPair> e;
        for (std::uint64_t j = 0, m = rng.below(3 * n); j < m; ++j)
            e.emplace_back(Vertex(rng.below(n)), Vertex(rng.below(n)));
        auto g = MultiGraph::from_edge_list(n, e);
        for (std::size_t k = 0; k <= 5; ++k) ASSERT_EQ(k_core_vertices(g, k), naive_k_core(g, k)) << i << ' ' << k;
    }
}

TEST(KCore, InducedSubgraphHasMinDegree) {
    Rng rng(14);
    auto g = gnm(400, 900, rng);
    auto core = k_core(g, 3);
    for (Vertex v = 0; v < core.graph.num_vertices(); ++v) EXPECT_GE(core.graph.degree(v), 3u);
}

TEST(Process, TwoCoreAppearsWithFirstCycle) {
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        Rng rng(seed);
        auto r = process_until_core(5, 1, rng);
        ASSERT_FALSE(r.exhausted);
        auto edges = r.snapshot.edge_list();
        ASSERT_EQ(edges.size(), r.sigma);
        EXPECT_FALSE(k_core_vertices(r.snapshot, 2).empty());
        auto before = MultiGraph::from_edge_list(5, std::vector<VertexPair>(edges.begin(), edges.end() - 1));
        EXPECT_TRUE(k_core_vertices(before, 2).empty());
    }
}

TEST(Process, ThreeCoreIsLinear) {
    int linear = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Rng rng(seed);
        auto r = process_until_core(3000, 2, rng);
        ASSERT_FALSE(r.exhausted);
        linear += r.core.vertices.size() >= 300;
        for (Vertex v = 0; v < r.core.graph.num_vertices(); ++v) ASSERT_GE(r.core.graph.degree(v), 3u);
    }
    EXPECT_GE(linear, 9);
}

TEST(Process, TinyGraphExhausts) {
    Rng rng(1);
    auto r = process_until_core(3, 2, rng);
    EXPECT_TRUE(r.exhausted);
    EXPECT_EQ(r.sigma, 3u);
}
