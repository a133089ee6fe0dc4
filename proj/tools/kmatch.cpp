// kmatch command-line front end.
//
// Exit codes: 0 success (factor found for `factor`), 10 factor-critical
// witness, 11 best-effort matching, 2 usage or parse error, 3 infeasible
// input, 4 internal invariant breach.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kmatch/certify.hpp"
#include "kmatch/experiment.hpp"
#include "kmatch/generate.hpp"
#include "kmatch/io.hpp"
#include "kmatch/oracle.hpp"
#include "kmatch/pipeline.hpp"
#include "kmatch/tinf.hpp"

namespace {

using namespace kmatch;

constexpr int kExitFactorCritical = 10;
constexpr int kExitBestEffort = 11;
constexpr int kExitUsage = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitInvariant = 4;

std::uint64_t g_seed = 0; // echoed on invariant failures

GraphFile load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path);
    return read_graph(in);
}

template <class F>
void with_output(const std::string& path, F&& write) {
    if (path.empty() || path == "-") {
        write(std::cout);
        return;
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    write(out);
}

void emit_table(const Table& t, const std::string& path, bool json) {
    with_output(path, [&](std::ostream& os) { t.write_csv(os); });
    if (json) {
        const std::string jpath = path.empty() || path == "-" ? "-" : path + ".jsonl";
        with_output(jpath, [&](std::ostream& os) { t.write_jsonl(os); });
    }
}

double parse_p_reserve(const std::string& s) {
    if (s == "auto") return -1.0;
    std::size_t used = 0;
    const double p = std::stod(s, &used);
    if (used != s.size() || p < 0.0 || p > 1.0) throw CLI::ValidationError("--p-reserve", "expected 'auto' or a number in [0,1]");
    return p;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Random k-matchings and k-factors of sparse random graphs"};
    app.require_subcommand(1);
    bool json = false;
    app.add_flag("--json", json, "Mirror every CSV output as JSON lines (<file>.jsonl)");

    // gen
    auto* gen = app.add_subcommand("gen", "Sample G with minimum degree k+1 and m edges");
    std::uint64_t gen_n = 0, gen_m = 0, seed = 1;
    std::optional<double> gen_c;
    int k = 2;
    bool gen_simple = false;
    std::string out_path;
    gen->add_option("--n", gen_n, "Vertices")->required();
    auto* gen_m_opt = gen->add_option("--m", gen_m, "Edges");
    gen->add_option("--c", gen_c, "Edge density (m = floor(c n))")->excludes(gen_m_opt);
    gen->add_option("--k", k, "Minimum degree is k+1")->required();
    gen->add_option("--seed", seed, "Random seed");
    gen->add_flag("--simple", gen_simple, "Remove loops and repeated pairs by degree-preserving switches");
    gen->add_option("-o,--output", out_path, "Graph file (default stdout)");

    // tinf
    auto* tinf = app.add_subcommand("tinf", "Run the randomized greedy k-matching");
    std::string in_path, trace_path;
    std::optional<int> k_opt;
    std::size_t check_every = 0;
    tinf->add_option("-i,--input", in_path, "Graph file")->required();
    tinf->add_option("--k", k_opt, "k (default: from the file header)");
    tinf->add_option("--seed", seed, "Random seed");
    tinf->add_option("--trace", trace_path, "Write the per-step trace CSV here");
    tinf->add_option("--check-every", check_every, "Recount buckets every this many steps");
    tinf->add_option("-o,--output", out_path, "Matching file (default stdout)");

    // factor
    auto* factor = app.add_subcommand("factor", "Reserve edges, run TINF, augment to a k-factor");
    std::string p_reserve = "auto";
    bool factor_trace = false;
    factor->add_option("-i,--input", in_path, "Graph file")->required();
    factor->add_option("--k", k_opt, "k (default: from the file header)");
    factor->add_option("--seed", seed, "Random seed");
    factor->add_option("--p-reserve", p_reserve, "Reservation probability, or 'auto' for n^-0.15");
    factor->add_flag("--trace", factor_trace, "Print augmentation statistics to stderr");
    factor->add_option("-o,--output", out_path, "Factor file (default stdout)");

    // process
    auto* process = app.add_subcommand("process", "Random graph process up to the first (k+1)-core");
    std::uint64_t proc_n = 0;
    process->add_option("--n", proc_n, "Vertices")->required();
    process->add_option("--k", k, "Core order is k+1")->required();
    process->add_option("--seed", seed, "Random seed");
    process->add_option("-o,--output", out_path, "Core graph file");

    // certify
    auto* certify = app.add_subcommand("certify", "Numerically check the constants and inequalities");
    CertifyOptions copt;
    copt.threads = thread_budget();
    certify->add_option("--rmax", copt.r_max, "Largest r");
    certify->add_option("--grid-step", copt.alpha.grid_step, "Grid step for the alpha suprema");
    certify->add_option("--g-step", copt.g_step, "Grid step for g(r, lambda)");
    certify->add_option("-o,--output", out_path, "Report CSV (default stdout)");

    // oracle
    auto* oracle = app.add_subcommand("oracle", "Exact maximum k-matching by enumeration (tiny graphs)");
    oracle->add_option("-i,--input", in_path, "Graph file")->required();
    oracle->add_option("--k", k_opt, "k (default: from the file header)");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "Run the factor pipeline over many seeds");
    ExperimentConfig ecfg;
    std::uint64_t seeds = 10, seed0 = 1;
    std::optional<std::uint64_t> sweep_m;
    std::optional<double> sweep_c;
    bool multigraph = false;
    sweep->add_option("--n", ecfg.n, "Vertices")->required();
    auto* sweep_m_opt = sweep->add_option("--m", sweep_m, "Edges");
    sweep->add_option("--c", sweep_c, "Edge density")->excludes(sweep_m_opt);
    sweep->add_option("--k", ecfg.k, "k")->required();
    sweep->add_option("--seeds", seeds, "Number of seeds");
    sweep->add_option("--seed0", seed0, "First seed");
    sweep->add_option("--p-reserve", p_reserve, "Reservation probability, or 'auto'");
    sweep->add_flag("--hitting", ecfg.hitting, "Use the (k+1)-core at the hitting time instead of G(n,m) with min degree k+1");
    sweep->add_flag("--multigraph", multigraph, "Keep loops and repeated pairs in generated graphs");
    sweep->add_option("-o,--output", out_path, "Summary CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        g_seed = seed;
        if (*gen) {
            if (!gen_c && gen_m_opt->count() == 0) throw CLI::ValidationError("gen", "one of --m or --c is required");
            const std::uint64_t m = gen_c ? static_cast<std::uint64_t>(std::floor(*gen_c * double(gen_n))) : gen_m;
            Rng rng(seed);
            GenerateOptions go;
            go.simple = gen_simple;
            go.switching = gen_simple;
            MultiGraph g = sample_min_degree_graph(gen_n, m, k, rng, go);
            with_output(out_path, [&](std::ostream& os) { write_graph(os, g, k); });
            return 0;
        }
        if (*tinf) {
            GraphFile gf = load_graph(in_path);
            const int kk = k_opt.value_or(gf.k);
            Rng rng(seed);
            TinfConfig cfg;
            cfg.trace = !trace_path.empty();
            cfg.check_every = check_every;
            const auto n = gf.graph.num_vertices();
            TinfResult r = run(std::move(gf.graph), kk, rng, cfg);
            with_output(out_path, [&](std::ostream& os) { write_matching(os, r.matching); });
            if (cfg.trace) emit_table(trace_table(r.trace), trace_path, json);
            const std::size_t target = static_cast<std::size_t>(kk) * n / 2;
            std::fprintf(stderr, "size %zu target %zu deficit %zu steps %llu loops %llu repeats %llu\n", r.matching.size(),
                         target, target - std::min(target, r.matching.size()),
                         static_cast<unsigned long long>(r.trace.tau), static_cast<unsigned long long>(r.trace.loops),
                         static_cast<unsigned long long>(r.trace.repeats));
            return 0;
        }
        if (*factor) {
            GraphFile gf = load_graph(in_path);
            const int kk = k_opt.value_or(gf.k);
            if (kk < 2) throw CLI::ValidationError("--k", "factor needs k >= 2");
            Rng rng(seed);
            PipelineConfig cfg;
            cfg.p_reserve = parse_p_reserve(p_reserve);
            PipelineResult r = factor_pipeline(gf.graph, kk, rng, cfg);
            with_output(out_path, [&](std::ostream& os) { write_matching(os, r.matching); });
            if (factor_trace) {
                const auto& a = r.augment;
                std::fprintf(stderr,
                             "p %.6g |V0| %zu |Ep| %zu tinf %zu iterations %zu tree %zu pool %zu graph %zu fallbacks %zu "
                             "discarded %zu seconds %.3f\n",
                             r.p_reserve, r.v0, r.pool, r.tinf_size, a.iterations, a.tree_augments, a.pool_connections,
                             a.graph_connections, a.fallbacks, a.discarded, r.seconds);
                if (!r.critical.problem.empty()) std::fprintf(stderr, "odd case: %s\n", r.critical.problem.c_str());
            }
            switch (r.status) {
            case FactorStatus::Factor:
                std::printf("factor size %zu\n", r.matching.size());
                return 0;
            case FactorStatus::FactorCritical:
                std::printf("factor-critical size %zu excluded %u\n", r.matching.size(), *r.excluded);
                return kExitFactorCritical;
            default:
                std::printf("best-effort size %zu deficit %zu (%s)\n", r.matching.size(), r.deficit, r.verify.message.c_str());
                return kExitBestEffort;
            }
        }
        if (*process) {
            Rng rng(seed);
            ProcessResult r = process_until_core(proc_n, k, rng);
            if (r.exhausted) {
                std::printf("no (k+1)-core: process exhausted all pairs\n");
                return 0;
            }
            std::printf("sigma %llu core %zu\n", static_cast<unsigned long long>(r.sigma), r.core.vertices.size());
            if (!out_path.empty()) with_output(out_path, [&](std::ostream& os) { write_graph(os, r.core.graph, k); });
            return 0;
        }
        if (*certify) {
            CertReport rep = certify_inequalities(copt);
            emit_table(certificate_table(rep), out_path, json);
            std::fprintf(stderr, "rows %zu failing %zu seconds %.2f\n", rep.rows.size(), rep.failures().size(), rep.seconds);
            return 0;
        }
        if (*oracle) {
            GraphFile gf = load_graph(in_path);
            const int kk = k_opt.value_or(gf.k);
            OracleResult r = brute_force_max_k_matching(gf.graph, kk);
            std::printf("optimum %zu\n", r.size);
            write_matching(std::cout, r.witness);
            return 0;
        }
        if (*sweep) {
            ecfg.m = sweep_m;
            ecfg.c = sweep_c;
            ecfg.simple = !multigraph;
            ecfg.p_reserve = parse_p_reserve(p_reserve);
            for (std::uint64_t i = 0; i < seeds; ++i) ecfg.seeds.push_back(seed0 + i);
            RunSummary s = run_sweep(ecfg);
            emit_table(summary_table(s), out_path, json);
            auto deficit = [](const RunRow& r) { return r.deficit; };
            auto secs = [](const RunRow& r) { return r.seconds; };
            std::fprintf(stderr, "success %zu/%zu deficit q50 %.1f q90 %.1f seconds q50 %.3f q90 %.3f\n", s.successes(),
                         s.rows.size(), s.quantile(0.5, deficit), s.quantile(0.9, deficit), s.quantile(0.5, secs),
                         s.quantile(0.9, secs));
            return 0;
        }
    } catch (const CLI::Error& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    } catch (const ParseError& e) {
        std::fprintf(stderr, "parse error: %s\n", e.what());
        return kExitUsage;
    } catch (const InfeasibleError& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return kExitInfeasible;
    } catch (const InvariantError& e) {
        std::fprintf(stderr, "invariant breach: %s (repro: --seed %llu)\n", e.what(), static_cast<unsigned long long>(g_seed));
        return kExitInvariant;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return kExitUsage;
    }
    return 0;
}
