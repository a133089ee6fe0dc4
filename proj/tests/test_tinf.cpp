#include <gtest/gtest.h>

#include <cmath>

#include "kmatch/alphas.hpp"
#include "kmatch/augment.hpp"
#include "kmatch/generate.hpp"
#include "kmatch/oracle.hpp"
#include "kmatch/tinf.hpp"

using namespace kmatch;

namespace {

MultiGraph complete(std::size_t n) {
    std::vector<VertexPair> e;
    for (Vertex u = 0; u < n; ++u)
        for (Vertex v = u + 1; v < n; ++v) e.emplace_back(u, v);
    return MultiGraph::from_edge_list(n, e);
}

MultiGraph with_extra(MultiGraph g, std::size_t n, const std::vector<VertexPair>& extra) {
    auto e = g.edge_list();
    e.insert(e.end(), extra.begin(), extra.end());
    return MultiGraph::from_edge_list(n, e);
}

MultiGraph desk_graph(std::uint64_t n, int k, double c, std::uint64_t seed) {
    Rng rng = Rng(seed).fork("graph");
    return sample_min_degree_graph(n, static_cast<std::uint64_t>(c * double(n)), k, rng);
}

void expect_frequency(std::size_t hits, std::size_t trials, double p) {
    EXPECT_NEAR(double(hits), p * trials, 3 * std::sqrt(trials * p * (1 - p))) << "p=" << p;
}

} // namespace

TEST(Tinf, CompleteFourTwoMatching) {
    auto g = complete(4);
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        Rng rng(seed);
        auto r = run(g, 2, rng);
        EXPECT_TRUE(verify_k_matching(g, {}, r.matching, 2));
        EXPECT_LE(r.matching.size(), 4u);
        auto best = exhaustive_augment(g, 2, r.matching);
        EXPECT_EQ(best.size(), 4u);
    }
}

TEST(Tinf, FiveCycleIsLegalInput) {
    auto g = MultiGraph::from_edge_list(5, std::vector<VertexPair>{{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 0}});
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        Rng rng(seed);
        auto r = run(g, 2, rng);
        EXPECT_LE(r.matching.size(), 5u);
        EXPECT_TRUE(verify_k_matching(g, {}, r.matching, 2));
    }
}

TEST(Tinf, LabelConservationAndBucketsEveryStep) {
    for (int k = 1; k <= 4; ++k)
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            auto g = desk_graph(600, k, (k + 1) / 2.0 + 0.5, seed);
            Rng rng(seed);
            TinfState st(g, k);
            ASSERT_TRUE(st.check_consistency());
            while (!st.done()) {
                st.step(st.select_vertex(rng), rng);
                for (Vertex v = 0; v < g.num_vertices(); ++v) ASSERT_EQ(st.label(v) + int(st.matched_degree(v)), k);
                ASSERT_TRUE(st.check_consistency());
                ASSERT_EQ(st.bucket_half_edges(), 2 * st.m());
            }
        }
}

TEST(Tinf, SingleDangerousVertexIsForced) {
    // K_4 plus a vertex of degree 2: with k = 2 it is the only dangerous vertex.
    auto g = with_extra(complete(4), 5, {{4, 0}, {4, 1}});
    TinfState st(g, 2);
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) ASSERT_EQ(st.select_vertex(rng), 4u);
}

TEST(Tinf, DangerousVerticesDrawnByDegree) {
    // K_6 plus a (degree 1, attached to 0) and b (degree 3, attached to 1, 2, 3); k = 3.
    auto g = with_extra(complete(6), 8, {{6, 0}, {7, 1}, {7, 2}, {7, 3}});
    TinfState st(g, 3);
    EXPECT_EQ(st.zeta(), 4u);
    Rng rng(2);
    const std::size_t trials = 100000;
    std::size_t a = 0, b = 0;
    for (std::size_t i = 0; i < trials; ++i) {
        auto v = st.select_vertex(rng);
        a += v == 6;
        b += v == 7;
    }
    EXPECT_EQ(a + b, trials);
    expect_frequency(a, trials, 0.25);
}

TEST(Tinf, WithoutDangerDrawIsDegreeProportional) {
    // K_4 with a doubled edge 0-1: degrees 4, 4, 3, 3 and nobody dangerous at k = 2.
    auto g = with_extra(complete(4), 4, {{0, 1}});
    TinfState st(g, 2);
    EXPECT_EQ(st.zeta(), 0u);
    Rng rng(3);
    const std::size_t trials = 140000;
    std::vector<std::size_t> c(4, 0);
    for (std::size_t i = 0; i < trials; ++i) ++c[st.select_vertex(rng)];
    expect_frequency(c[0], trials, 4.0 / 14);
    expect_frequency(c[2], trials, 3.0 / 14);
}

TEST(Tinf, FreshPVectorSitsInTopClass) {
    auto g = desk_graph(2000, 3, 2.5, 1);
    TinfState st(g, 3);
    auto p = st.p_vector();
    ASSERT_EQ(p.size(), 4u);
    EXPECT_DOUBLE_EQ(p[2], 1.0);
    EXPECT_DOUBLE_EQ(p[0] + p[1] + p[3], 0.0);
}

TEST(Tinf, MidRunMassOutsideDangerIsNearlyOne) {
    const std::uint64_t n = 100000;
    auto g = desk_graph(n, 2, 2.0, 4);
    Rng rng(4);
    TinfConfig cfg;
    cfg.trace = true;
    auto r = run(g, 2, rng, cfg);
    const auto& rows = r.trace.rows;
    ASSERT_FALSE(rows.empty());
    const auto& mid = rows[rows.size() / 2];
    EXPECT_LE(double(mid.zeta), std::pow(std::log(double(n)), 6));
    double s = 0;
    for (int i = 0; i < 2; ++i) s += mid.p[i];
    EXPECT_GE(s, 0.99);
    double total = 0;
    for (double x : mid.p) total += x;
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Polyhedron, Examples) {
    const AlphaTable a = compute_alphas(10);
    for (int d = 2; d <= 10; ++d) {
        std::vector<double> geo(d);
        for (int r = 0; r < d; ++r) geo[r] = 0.01 * std::pow(1.56, r);
        EXPECT_TRUE(in_polyhedron(geo, d, a)) << d;
        auto bad = geo;
        bad[1] = 1.50 * bad[0];
        if (d >= 3) {
            EXPECT_FALSE(in_polyhedron(bad, d, a)) << d;
        }
    }
}

TEST(Polyhedron, HoldsAtTStar) {
    const AlphaTable a = compute_alphas(10);
    int inside = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto g = desk_graph(200000, 3, 2.5, seed);
        Rng rng(seed);
        TinfConfig cfg;
        cfg.trace = true;
        auto r = run(std::move(g), 3, rng, cfg);
        ASSERT_EQ(r.trace.p_at_t_star.size(), 4u);
        inside += in_polyhedron(r.trace.p_at_t_star, 4, a);
    }
    EXPECT_GE(inside, 18);
}

TEST(Drift, EmptyWhenZetaStaysZero) {
    TinfTrace tr;
    tr.zeta.assign(500, 0);
    EXPECT_TRUE(drift_report(tr).windows.empty());
}

TEST(Drift, MostlyNonPositiveAndIncrementsBounded) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto g = desk_graph(200000, 2, 2.0, seed);
        const auto dmax = g.max_degree();
        Rng rng(seed);
        TinfConfig cfg;
        cfg.trace = true;
        auto r = run(std::move(g), 2, rng, cfg);
        auto rep = drift_report(r.trace);
        EXPECT_GE(rep.fraction_nonpositive(), 0.95);
        EXPECT_LE(rep.max_abs_increment, 2 * dmax);
    }
}

TEST(Tinf, LedgerInequalityAndWorkBound) {
    for (int k = 1; k <= 3; ++k)
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            const std::uint64_t n = 30000;
            auto g = desk_graph(n, k, (k + 1) / 2.0 + 0.5, seed);
            const auto m = g.num_edges();
            Rng rng(seed);
            TinfConfig cfg;
            cfg.check_every = 1000;
            auto r = run(g, k, rng, cfg);
            const auto& tr = r.trace;
            EXPECT_LE(std::uint64_t(k) * n, tr.sum_s + tr.sum_mult + 2 * tr.sum_h + 2 * tr.raw_size);
            EXPECT_EQ(tr.raw_size, r.matching.size() + tr.loops + tr.repeats);
            EXPECT_GT(tr.bucket_checks, 0u);
            // Each edge is removed once (two half-edges) and each step samples one.
            EXPECT_LE(tr.half_edge_touches, 2 * m + tr.tau);
            EXPECT_TRUE(verify_k_matching(g, {}, r.matching, k));
        }
}

TEST(Tinf, DeficitSmallAtScale) {
    int good = 0;
    const std::uint64_t n = 200000;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto g = desk_graph(n, 2, 2.0, seed);
        Rng rng(seed);
        auto r = run(std::move(g), 2, rng);
        good += double(n - r.matching.size()) <= std::pow(double(n), 0.45);
    }
    EXPECT_GE(good, 18);
}

TEST(Priority, EmptySetReproducesPlainRun) {
    auto g = desk_graph(5000, 2, 2.0, 7);
    Rng a(7), b(7);
    auto plain = run(g, 2, a);
    auto prio = run_tinf_with_priority(g, {}, 2, b);
    EXPECT_EQ(plain.matching, prio.matching);
}

TEST(Priority, SmallSetDrainsOnSchedule) {
    const std::uint64_t n = 50000;
    const int k = 2;
    auto g = desk_graph(n, k, 2.0, 8);
    Rng pick(8);
    std::vector<Vertex> v0;
    for (Vertex v = 0; v < n; ++v)
        if (pick.below(1000) == 0) v0.push_back(v);
    Rng rng(8);
    auto r = run_tinf_with_priority(g, v0, k, rng);
    ASSERT_TRUE(r.trace.priority_cleared.has_value());
    const double n0 = double(v0.size());
    const double by = std::ceil(n0 * std::sqrt(double(n) / n0) / k);
    // One scheduled slot of slack: the drain is only observed at scheduled steps.
    const double period = std::ceil(std::sqrt(double(n) / n0) / k);
    EXPECT_LE(double(*r.trace.priority_cleared), by + period);
    EXPECT_TRUE(verify_k_matching(g, {}, r.matching, k));
}
