#ifndef KMATCH_CERTIFY_HPP
#define KMATCH_CERTIFY_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "kmatch/alphas.hpp"
#include "kmatch/numerics.hpp"
#include "kmatch/rng.hpp"

namespace kmatch {

/// One certified quantity. A negative worst_margin means the inequality fails
/// somewhere on its grid; argmin_lambda is where the worst case sits.
struct CertRow {
    std::string name;
    int r = 0;
    int d = 0;
    double worst_margin = INFINITY;
    double argmin_lambda = NAN;
    double value = NAN;
};

struct CertifyOptions {
    int r_max = 50;
    AlphaOptions alpha;
    double g_step = 0.01;
    double simplex_step = 0.01;
    double lambda_max = 40.0;
    double lambda_step = 0.05;
    unsigned threads = 1;
    std::uint64_t seed = 1;
};

struct CertReport {
    AlphaTable alphas;
    std::vector<CertRow> rows;
    double seconds = 0.0;

    std::vector<const CertRow*> failures() const {
        std::vector<const CertRow*> out;
        for (const auto& row : rows)
            if (!(row.worst_margin >= 0)) out.push_back(&row);
        return out;
    }
};

namespace detail {

/// λ_1(x) and q_{i,i}(x) tabulated over an x grid.
struct QTable {
    std::vector<double> xs, lam1;
    std::vector<std::vector<double>> qd; // qd[i][ix] = q_{i,i}(x)
    std::vector<std::vector<double>> lam; // lam[i][ix] = λ_i(x)

    QTable(int imax, double xmax, double step) {
        const auto n = static_cast<std::size_t>(std::llround(xmax / step)) + 1;
        xs.resize(n);
        for (std::size_t i = 0; i < n; ++i) xs[i] = std::min(xmax, i * step);
        qd.assign(imax + 1, std::vector<double>(n, 0.0));
        lam.assign(imax + 1, std::vector<double>(n, 0.0));
        lam1.resize(n);
        for (std::size_t ix = 0; ix < n; ++ix) {
            lam1[ix] = lambda_mean(1, xs[ix]);
            for (int i = 0; i <= imax; ++i) {
                lam[i][ix] = lambda_mean(i, xs[ix]);
                if (i >= 1) qd[i][ix] = q(i, i, xs[ix]);
            }
        }
    }
};

inline void keep_min(CertRow& row, double margin, double x) {
    if (margin < row.worst_margin) {
        row.worst_margin = margin;
        row.argmin_lambda = x;
    }
}

inline std::vector<double> grid(double hi, double step) {
    std::vector<double> out;
    const auto n = static_cast<long>(std::llround(hi / step));
    for (long i = 0; i <= n; ++i) out.push_back(std::min(hi, i * step));
    return out;
}

inline double p1_cap(int d) { return 0.55 / (std::pow(1.55, d - 1) - 1.0); }

} // namespace detail

/// Evaluates every grid inequality and collects one row per (name, r, d).
inline CertReport certify_inequalities(const CertifyOptions& opt = {}) {
    using detail::keep_min;
    const auto t0 = std::chrono::steady_clock::now();
    CertReport report;
    report.alphas = compute_alphas(opt.r_max, opt.alpha);
    const AlphaTable& A = report.alphas;
    const int R = opt.r_max;

    std::vector<std::function<std::vector<CertRow>()>> tasks;

    // Constants themselves: α_r within [1.55, bound].
    tasks.emplace_back([&] {
        std::vector<CertRow> out;
        for (int r = 2; r <= R; ++r) {
            const auto& e = A.at(r);
            CertRow row{"alpha", r, 0, std::min(alpha_upper_bound(r) - e.alpha, e.alpha - 1.55),
                        r == 2 ? NAN : A.at(r - 1).sup_lambda, e.alpha};
            out.push_back(row);
        }
        // The plain 1.55^r denominator at r = 2 against the appendix's 1.55^3.
        AlphaOptions plain = opt.alpha;
        auto [sup, at] = alpha_supremum(2, 1.55, 2, plain);
        const double alpha3 = std::max(1.55, sup) + 1e-5;
        out.push_back({"flag_alpha_exponent_r2", 2, 0, alpha_upper_bound(3) - alpha3, at, alpha3});
        return out;
    });

    // Pieces of the α bound argument on [2, 24].
    tasks.emplace_back([&] {
        std::vector<CertRow> out;
        for (int r = 2; r <= std::min(24, R - 1); ++r) {
            const auto& e = A.at(r);
            const int ex = std::max(r, opt.alpha.floor_exponent);
            out.push_back({"alpha_tail_analytic", r, 0, 4e-5 - e.tail_bound, r + opt.alpha.grid_span, e.tail_bound});
            out.push_back({"alpha_sup_minus_a", r, 0, 4e-5 - (e.a_prime - e.alpha), e.sup_lambda, e.a_prime - e.alpha});
            CertRow tail{"alpha_tail_numeric", r, 0};
            double worst = -INFINITY;
            const double lo = r + opt.alpha.grid_span;
            for (double x = lo; x <= 8 * lo; x += 0.01) {
                double v = alpha_bracket(r, x, e.alpha, ex) - e.alpha;
                if (v > worst) {
                    worst = v;
                    tail.argmin_lambda = x;
                }
            }
            tail.worst_margin = 4e-5 - worst;
            tail.value = worst;
            out.push_back(tail);
        }
        return out;
    });

    // g(r,x) ≥ 0 with a_r = α_r, and the a = 1.5 variant, r ∈ [2, r_max], x ∈ [0, 5r].
    for (int r0 = 2; r0 <= R; r0 += 8) {
        tasks.emplace_back([&, r0] {
            std::vector<CertRow> out;
            for (int r = r0; r < r0 + 8 && r <= R; ++r) {
                CertRow ga{"g_nonneg", r, 0}, gb{"g_a15_nonneg", r, 0};
                for (double x : detail::grid(5.0 * r, opt.g_step)) {
                    keep_min(ga, g(r, x, A[r]), x);
                    keep_min(gb, g(r, x, 1.5), x);
                }
                ga.value = ga.worst_margin;
                gb.value = gb.worst_margin;
                out.push_back(ga);
                out.push_back(gb);
            }
            return out;
        });
    }

    // Truncated means: monotone in the floor and within [max(x,r), x+r].
    tasks.emplace_back([&] {
        std::vector<CertRow> out;
        for (int r = 1; r <= 30; ++r) {
            CertRow mono{"lambda_monotone", r, 0}, bounds{"lambda_bounds", r, 0}, step{"lambda_step", r, 0};
            for (double x : detail::grid(20.0, 0.01)) {
                const double lr = lambda_mean(r, x), lp = lambda_mean(r - 1, x);
                keep_min(mono, lr - lp, x);
                keep_min(bounds, std::min(lr - std::max(x, double(r)), x + r - lr), x);
                keep_min(step, lp + r - lr, x);
            }
            out.push_back(mono);
            out.push_back(bounds);
            out.push_back(step);
        }
        return out;
    });

    // Polyhedron bound on sampled points of B_d, d = 11..20, and the scalar slack.
    tasks.emplace_back([&] {
        std::vector<CertRow> out;
        detail::QTable T(22, opt.lambda_max, opt.lambda_step);
        Rng rng = Rng(opt.seed).fork("certify.bd");
        for (int d = 11; d <= std::min(20, R); ++d) {
            CertRow row{"bd_sum_bound", 0, d};
            const double bound = 0.55 * d * (d + 1) / (std::pow(1.55, d - 1) - 1.0);
            std::vector<double> p(d + 1);
            for (int s = 0; s < 400; ++s) {
                p[1] = rng.uniform();
                for (int i = 2; i < d; ++i) p[i] = (A[std::min(i, R)] + 0.5 * rng.uniform()) * p[i - 1];
                p[d] = 10.0 * rng.uniform() * p[d - 1];
                double sum = 0;
                for (int i = 1; i <= d; ++i) sum += p[i];
                const double scale = (s == 0 ? 1.0 : rng.uniform()) / sum;
                for (int i = 1; i <= d; ++i) p[i] *= scale;
                for (std::size_t ix = 0; ix < T.xs.size(); ++ix) {
                    double acc = 0;
                    for (int i = 1; i <= d; ++i) acc += i * p[i] * T.qd[i + 1][ix];
                    keep_min(row, bound - p[1] * T.lam1[ix] * acc, T.xs[ix]);
                }
            }
            row.value = bound;
            out.push_back(row);
        }
        for (int d = 11; d <= R; ++d) {
            const double slack = 1.0 - 0.55 * d * (d + 1) / (std::pow(1.55, d - 1) - 1.0);
            out.push_back({"bd_slack", 0, d, slack - 0.001, NAN, slack});
        }
        return out;
    });

    // Drift bound for 3 ≤ d ≤ 10: sup p_1 λ_1 q_{d+1,d+1}(d p_d* + Σ i 1.55^{i-1} p_1) ≤ 1 − 0.001.
    tasks.emplace_back([&] {
        std::vector<CertRow> out;
        detail::QTable T(12, opt.lambda_max, opt.lambda_step);
        for (int d = 3; d <= 10; ++d) {
            CertRow row{"drift_small_d", 0, d};
            double a = 0, b = 0;
            for (int i = 1; i <= d - 1; ++i) {
                a += std::pow(1.55, i - 1);
                b += i * std::pow(1.55, i - 1);
            }
            const double cap = detail::p1_cap(d);
            double worst = -INFINITY;
            for (int s = 0; s <= 400; ++s) {
                const double p1 = cap * s / 400.0;
                const double inner = d * (1.0 - a * p1) + b * p1;
                for (std::size_t ix = 0; ix < T.xs.size(); ++ix) {
                    const double v = p1 * T.lam1[ix] * T.qd[d + 1][ix] * inner;
                    if (v > worst) {
                        worst = v;
                        row.argmin_lambda = T.xs[ix];
                    }
                }
            }
            row.worst_margin = (1.0 - 0.001) - worst;
            row.value = worst;
            out.push_back(row);
        }
        return out;
    });

    // LP relaxation for 7 ≤ d ≤ 20 (objective must exceed 1e−5) and p_1 λ_1 d q_{d+1,d+1} < 1.
    tasks.emplace_back([&] {
        std::vector<CertRow> out;
        detail::QTable T(22, opt.lambda_max, opt.lambda_step);
        for (int d = 7; d <= 20; ++d) {
            CertRow lp{"lp_relaxation", 0, d}, pre{"lp_prefactor", 0, d};
            const double cap = detail::p1_cap(d);
            double worst_pre = -INFINITY;
            for (int s = 0; s <= 400; ++s) {
                const double p1 = cap * s / 400.0;
                double geo = 0;
                for (int i = 1; i <= d - 3; ++i) geo += std::pow(1.55, i - 1);
                const double beta = 1.0 - geo * p1;
                for (std::size_t ix = 0; ix < T.xs.size(); ++ix) {
                    const double pl = p1 * T.lam1[ix];
                    double acc = 0;
                    for (int i = 1; i <= d - 3; ++i) acc += i * std::pow(1.55, i - 1) * p1 * T.qd[i + 1][ix];
                    const double obj = 1.0 - 1.552 * 1.552 * beta / 2.552 - pl * acc -
                                       pl * (d - 2) * beta / 2.552 * T.qd[d - 1][ix] -
                                       pl * (d - 1) * 1.552 * beta / 2.552 * T.qd[d][ix];
                    keep_min(lp, obj - 1e-5, T.xs[ix]);
                    const double v = pl * d * T.qd[d + 1][ix];
                    if (v > worst_pre) {
                        worst_pre = v;
                        pre.argmin_lambda = T.xs[ix];
                    }
                }
            }
            lp.value = lp.worst_margin + 1e-5;
            pre.worst_margin = 1.0 - worst_pre;
            pre.value = worst_pre;
            out.push_back(lp);
            out.push_back(pre);
        }
        return out;
    });

    // Late-phase case inequalities on the p-simplex.
    tasks.emplace_back([&] {
        std::vector<CertRow> out;
        detail::QTable T(8, opt.lambda_max, 4 * opt.lambda_step);
        const double a2 = A[2], a3 = A[std::min(3, R)], a4 = A[std::min(4, R)];
        const double h = opt.simplex_step;
        const auto& L = T.lam;
        const auto& Q = T.qd;

        // [τ6, τ5]: p5 = 1.56 p4 + 0.05 p6, p2 = α2 p1, p3 = α3 p2, Σ p = 1.
        CertRow f6{"case_tau6", 0, 6};
        for (double p1 = 0; p1 <= 1; p1 += h) {
            const double p2 = a2 * p1, p3 = a3 * p2;
            for (double p4 = a4 * p3; p4 <= 1; p4 += h) {
                const double p6 = (1.0 - p1 - p2 - p3 - 2.56 * p4) / 1.05;
                if (p6 < 0) break;
                const double p5 = 1.56 * p4 + 0.05 * p6;
                const double p[7] = {0, p1, p2, p3, p4, p5, p6};
                for (std::size_t ix = 0; ix < T.xs.size(); ++ix) {
                    const double pl = p1 * T.lam1[ix];
                    double acc = 0;
                    for (int i = 1; i <= 6; ++i) acc += i * p[i] * Q[i + 1][ix];
                    const double v = (1 + p6 - pl * acc) * (1.05 * L[6][ix] + 0.05) - (2.56 * L[5][ix] + 1) * p5 +
                                     1.56 * (L[4][ix] + 1) * p4 +
                                     pl * (-6 * p5 * Q[5][ix] + 1.56 * 5 * p4 * Q[5][ix] + 0.05 * 7 * p6 * Q[7][ix]);
                    keep_min(f6, v, T.xs[ix]);
                }
            }
        }
        f6.value = f6.worst_margin;
        out.push_back(f6);

        // [τ4, τ3]: p ∈ B_4, p3 ≤ 0.36, Σ_{i≤4} p = 1.
        CertRow f4{"case_tau4", 0, 4};
        for (double p1 = 0; p1 <= 1; p1 += h)
            for (double p2 = a2 * p1; p2 <= 1; p2 += h)
                for (double p3 = a3 * p2; p3 <= 0.36; p3 += h) {
                    const double p4 = 1.0 - p1 - p2 - p3;
                    if (p4 < 0) break;
                    for (std::size_t ix = 0; ix < T.xs.size(); ++ix) {
                        const double pl = p1 * T.lam1[ix];
                        const double acc = p1 * Q[2][ix] + 2 * p2 * Q[3][ix] + 3 * p3 * Q[4][ix] + 4 * p4 * Q[5][ix];
                        const double v = (1 + p4 - pl * acc) * L[4][ix] - ((a3 + 1) * L[3][ix] + 1) * p3 +
                                         a3 * (L[2][ix] + 1) * p2 - pl * (4 * p3 * Q[4][ix] + 3 * p2 * Q[3][ix]);
                        keep_min(f4, v, T.xs[ix]);
                    }
                }
        f4.value = f4.worst_margin;
        out.push_back(f4);

        // [τ3, τ2]: p2 ≥ α2 p1, p2 ≤ 0.3, Σ_{i≤3} p = 1.
        CertRow f3{"case_tau3", 0, 3};
        for (double p1 = 0; p1 <= 1; p1 += h)
            for (double p2 = a2 * p1; p2 <= 0.3; p2 += h) {
                const double p3 = 1.0 - p1 - p2;
                if (p3 < 0) break;
                for (std::size_t ix = 0; ix < T.xs.size(); ++ix) {
                    const double pl = p1 * T.lam1[ix];
                    const double acc = p1 * Q[2][ix] + 2 * p2 * Q[3][ix] + 3 * p3 * Q[4][ix];
                    const double v = (1 + p3 - pl * acc) * L[3][ix] - ((a2 + 1) * L[2][ix] + 1) * p2 +
                                     a2 * (L[1][ix] + 1) * p1 - pl * (3 * p2 * Q[3][ix] + 2 * p1 * Q[2][ix]);
                    keep_min(f3, v, T.xs[ix]);
                }
            }
        f3.value = f3.worst_margin;
        out.push_back(f3);
        return out;
    });

    std::vector<std::vector<CertRow>> results(tasks.size());
    const unsigned threads = std::max(1U, std::min<unsigned>(opt.threads, static_cast<unsigned>(tasks.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < tasks.size();) results[i] = tasks[i]();
    };
    std::vector<std::thread> pool;
    for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& chunk : results) report.rows.insert(report.rows.end(), chunk.begin(), chunk.end());

    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

} // namespace kmatch

#endif
