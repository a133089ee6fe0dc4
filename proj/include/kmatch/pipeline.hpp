#ifndef KMATCH_PIPELINE_HPP
#define KMATCH_PIPELINE_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "kmatch/augment.hpp"
#include "kmatch/generate.hpp"
#include "kmatch/oracle.hpp"
#include "kmatch/tinf.hpp"

namespace kmatch {

enum class FactorStatus { Factor, FactorCritical, BestEffort };

inline const char* to_string(FactorStatus s) {
    switch (s) {
    case FactorStatus::Factor: return "factor";
    case FactorStatus::FactorCritical: return "factor-critical";
    default: return "best-effort";
    }
}

struct PipelineConfig {
    /// Negative means n^{−0.15}.
    double p_reserve = -1.0;
    TinfConfig tinf;
    std::optional<AugmentParams> params;
    bool check_trees = false;
    /// Candidates for z tried before giving up on a clean local structure.
    std::size_t z_tries = 64;
};

struct PipelineResult {
    std::vector<VertexPair> matching;
    std::optional<Vertex> excluded;
    FactorStatus status = FactorStatus::BestEffort;
    std::size_t target = 0;  // ⌊kn/2⌋, or k(n−1)/2 with z excluded
    std::size_t deficit = 0; // target − |M|
    double p_reserve = 0.0;
    std::size_t v0 = 0, pool = 0, e0 = 0;
    std::size_t tinf_size = 0;
    TinfTrace tinf;
    AugmentStats augment;
    FactorCriticalReport critical;
    std::size_t z_attempts = 0;
    VerifyResult verify;
    /// k-matching validity after each stage: "tinf", "z" (odd kn only), "augment".
    std::vector<std::pair<std::string, VerifyResult>> stages;
    double seconds = 0.0;

    bool stages_ok() const {
        return std::all_of(stages.begin(), stages.end(), [](const auto& s) { return s.second.ok; });
    }
};

namespace detail {

/// Vertices at distance ≥ 5 from every deficient vertex, in id order.
inline std::vector<Vertex> far_from_deficient(const PairGraph& a, const KMatching& m) {
    const auto n = a.num_vertices();
    std::vector<int> dist(n, -1);
    std::vector<Vertex> queue;
    for (Vertex v = 0; v < n; ++v)
        if (m.deficient(v)) {
            dist[v] = 0;
            queue.push_back(v);
        }
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const Vertex y = queue[head];
        if (dist[y] == 4) continue;
        for (Vertex x : a.neighbors(y))
            if (dist[x] < 0) {
                dist[x] = dist[y] + 1;
                queue.push_back(x);
            }
    }
    std::vector<Vertex> out;
    for (Vertex v = 0; v < n; ++v)
        if (dist[v] < 0) out.push_back(v);
    return out;
}

} // namespace detail

/// Reserve, TINF with V_0 priority, the odd-kn start, augmentation, verification.
inline PipelineResult factor_pipeline(const MultiGraph& g, int k, Rng& rng, const PipelineConfig& cfg = {}) {
    if (k < 1) throw std::invalid_argument("factor pipeline needs k >= 1");
    const auto t0 = std::chrono::steady_clock::now();
    const auto n = g.num_vertices();
    PipelineResult res;
    res.p_reserve = cfg.p_reserve >= 0.0 ? cfg.p_reserve : std::pow(std::max<double>(double(n), 1.0), -0.15);

    Rng reserve_rng = rng.fork("reserve");
    ReservedEdges reserved = reserve_edges(g, k, res.p_reserve, reserve_rng);
    res.v0 = reserved.v0.size();
    res.pool = reserved.pool.size();
    res.e0 = reserved.e0;

    Rng tinf_rng = rng.fork("tinf");
    TinfResult tinf = run_tinf_with_priority(reserved.residual, reserved.v0, k, tinf_rng, cfg.tinf);
    res.tinf_size = tinf.matching.size();
    res.tinf = std::move(tinf.trace);
    res.stages.emplace_back("tinf", verify_k_matching(reserved.residual, {}, tinf.matching, k));
    KMatching m = KMatching::from_pairs(n, k, tinf.matching);

    const bool odd = (static_cast<std::uint64_t>(k) * n) % 2 == 1;
    if (odd) {
        const PairGraph a = PairGraph::from_multigraph(reserved.residual);
        auto candidates = detail::far_from_deficient(a, m);
        if (candidates.empty()) {
            candidates.resize(n);
            for (Vertex v = 0; v < n; ++v) candidates[v] = v;
        }
        Rng z_rng = rng.fork("z");
        z_rng.shuffle(candidates);
        std::optional<KMatching> chosen;
        for (Vertex z : candidates) {
            if (res.z_attempts >= cfg.z_tries) break;
            ++res.z_attempts;
            FactorCriticalReport rep;
            KMatching trial = factor_critical_start(a, m, z, &rep);
            res.critical = rep;
            res.excluded = z;
            if (rep.ok) {
                chosen = std::move(trial);
                break;
            }
        }
        if (!chosen) {
            // No clean ball: clear the first candidate only and let augmentation repair the rest.
            const Vertex z = candidates.front();
            res.excluded = z;
            chosen = m;
            for (Vertex x : std::vector<Vertex>(chosen->partners(z))) chosen->remove(z, x);
        }
        m = std::move(*chosen);
        res.stages.emplace_back("z", verify_k_matching(reserved.residual, {}, m.edges(), k));
    }

    AugmentParams params = cfg.params ? *cfg.params : AugmentParams::for_graph(n, k);
    params.check_trees = params.check_trees || cfg.check_trees;
    AugmentInput input{&reserved.residual, reserved.pool, reserved.in_v0, res.excluded};
    Rng aug_rng = rng.fork("augment");
    AugmentResult aug = augment_pool(input, std::move(m), params, aug_rng);
    res.augment = aug.stats;
    res.matching = aug.matching.edges();

    res.target = odd ? static_cast<std::size_t>(k) * (n - 1) / 2 : static_cast<std::size_t>(k) * n / 2;
    res.deficit = res.target > res.matching.size() ? res.target - res.matching.size() : 0;
    res.stages.emplace_back("augment", verify_k_matching(reserved.residual, reserved.pool, res.matching, k));
    res.verify = verify_k_factor(g, {}, res.matching, k, res.excluded);
    if (res.verify)
        res.status = odd ? FactorStatus::FactorCritical : FactorStatus::Factor;
    else
        res.status = FactorStatus::BestEffort;
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

struct HittingResult {
    ProcessResult process;
    PipelineResult pipeline;
    bool ran_pipeline = false;
};

/// Runs F_0, F_1, ... to σ_{k+1} and the factor pipeline on the (k+1)-core found there.
inline HittingResult hitting_time_experiment(std::uint64_t n, int k, Rng& rng, const PipelineConfig& cfg = {}) {
    HittingResult out;
    Rng process_rng = rng.fork("process");
    out.process = process_until_core(n, k, process_rng);
    if (out.process.exhausted || out.process.core.vertices.empty()) return out;
    Rng pipe_rng = rng.fork("pipeline");
    out.pipeline = factor_pipeline(out.process.core.graph, k, pipe_rng, cfg);
    out.ran_pipeline = true;
    return out;
}

} // namespace kmatch

#endif
