#ifndef KMATCH_EXPERIMENT_HPP
#define KMATCH_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "kmatch/io.hpp"
#include "kmatch/pipeline.hpp"

namespace kmatch {

struct ExperimentConfig {
    std::uint64_t n = 0;
    std::optional<std::uint64_t> m;
    std::optional<double> c;
    int k = 2;
    std::vector<std::uint64_t> seeds;
    double p_reserve = -1.0; // negative: n^{−0.15}
    bool simple = true;      // draw G^{δ≥k+1}_{n,m} as a simple graph
    bool hitting = false;    // run the graph process to σ_{k+1} instead
    bool check_trees = false;

    std::uint64_t edges() const {
        if (m) return *m;
        if (c) return static_cast<std::uint64_t>(std::floor(*c * static_cast<double>(n)));
        return 0;
    }

    void validate() const {
        if (m && c) throw std::invalid_argument("give either m or c, not both");
        if (!hitting && !m && !c) throw std::invalid_argument("one of m or c is required");
        if (k < 2) throw std::invalid_argument("factor pipelines need k >= 2");
        if (n == 0) throw std::invalid_argument("n must be positive");
    }
};

struct RunRow {
    std::uint64_t seed = 0;
    std::uint64_t n = 0, m = 0;
    int k = 0;
    std::size_t matching = 0, target = 0, deficit = 0;
    std::size_t tinf_deficit = 0;
    FactorStatus status = FactorStatus::BestEffort;
    std::optional<Vertex> excluded;
    std::size_t iterations = 0, fallbacks = 0;
    double seconds = 0.0;
    std::optional<std::uint64_t> sigma;
    std::optional<std::size_t> core_size;
};

struct RunSummary {
    std::vector<RunRow> rows;

    std::size_t successes() const {
        return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const RunRow& r) {
            return r.status != FactorStatus::BestEffort;
        }));
    }

    /// Linear-interpolated quantile of a per-row field.
    template <class F>
    double quantile(double q, F&& field) const {
        std::vector<double> xs;
        for (const auto& r : rows) xs.push_back(static_cast<double>(field(r)));
        if (xs.empty()) return NAN;
        std::sort(xs.begin(), xs.end());
        const double pos = q * static_cast<double>(xs.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const auto hi = std::min(lo + 1, xs.size() - 1);
        return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
    }
};

inline RunRow run_seed(const ExperimentConfig& cfg, std::uint64_t seed) {
    RunRow row;
    row.seed = seed;
    row.k = cfg.k;
    Rng rng(seed);
    PipelineConfig pc;
    pc.p_reserve = cfg.p_reserve;
    pc.check_trees = cfg.check_trees;
    PipelineResult res;
    if (cfg.hitting) {
        HittingResult h = hitting_time_experiment(cfg.n, cfg.k, rng, pc);
        row.n = h.process.core.graph.num_vertices();
        row.m = h.process.core.graph.num_edges();
        row.sigma = h.process.sigma;
        row.core_size = h.process.core.vertices.size();
        if (!h.ran_pipeline) return row;
        res = std::move(h.pipeline);
    } else {
        Rng graph_rng = rng.fork("graph");
        GenerateOptions go;
        go.simple = cfg.simple;
        go.switching = cfg.simple;
        MultiGraph g = sample_min_degree_graph(cfg.n, cfg.edges(), cfg.k, graph_rng, go);
        row.n = g.num_vertices();
        row.m = g.num_edges();
        res = factor_pipeline(g, cfg.k, rng, pc);
    }
    row.matching = res.matching.size();
    row.target = res.target;
    row.deficit = res.deficit;
    row.tinf_deficit = res.target > res.tinf_size ? res.target - res.tinf_size : 0;
    row.status = res.status;
    row.excluded = res.excluded;
    row.iterations = res.augment.iterations;
    row.fallbacks = res.augment.fallbacks;
    row.seconds = res.seconds;
    return row;
}

/// Thread cap: KMATCH_THREADS if set and positive, else the hardware count.
inline unsigned thread_budget() {
    unsigned hw = std::max(1U, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("KMATCH_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    return hw;
}

/// Seeds run in parallel; each seed's pipeline is sequential. Row order follows `cfg.seeds`.
inline RunSummary run_sweep(const ExperimentConfig& cfg, unsigned threads = thread_budget()) {
    cfg.validate();
    RunSummary out;
    out.rows.resize(cfg.seeds.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    auto worker = [&] {
        for (std::size_t i; (i = next++) < cfg.seeds.size();) {
            try {
                out.rows[i] = run_seed(cfg, cfg.seeds[i]);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!error) error = std::current_exception();
            }
        }
    };
    const unsigned t = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(cfg.seeds.size())));
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < t; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
    return out;
}

inline Table summary_table(const RunSummary& s) {
    Table t;
    t.header = {"seed", "n", "m", "k", "matching", "target", "deficit", "tinf_deficit", "status", "excluded",
                "iterations", "fallbacks", "seconds", "sigma", "core_size"};
    for (const auto& r : s.rows) {
        auto opt = [](const auto& o) -> nlohmann::json { return o ? nlohmann::json(*o) : nlohmann::json(""); };
        t.rows.push_back({r.seed, r.n, r.m, r.k, r.matching, r.target, r.deficit, r.tinf_deficit,
                          std::string(to_string(r.status)), opt(r.excluded), r.iterations, r.fallbacks,
                          r.seconds, opt(r.sigma), opt(r.core_size)});
    }
    return t;
}

} // namespace kmatch

#endif
