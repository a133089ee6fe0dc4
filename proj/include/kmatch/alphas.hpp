#ifndef KMATCH_ALPHAS_HPP
#define KMATCH_ALPHAS_HPP

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "kmatch/numerics.hpp"

namespace kmatch {

struct AlphaEntry {
    int r = 0;
    double alpha = 0.0;      // α_r
    double a_prime = NAN;    // a_r′, the supremum that feeds α_{r+1}
    double sup_lambda = NAN; // location of that supremum
    double margin = 0.0;     // upper bound minus α_r
    std::string rule;        // how α_r was produced
    double tail_bound = NAN; // analytic bound on the λ > r+16 contribution
};

struct AlphaTable {
    std::vector<AlphaEntry> entries; // entries[r], valid for 2 ≤ r ≤ r_max
    int r_max = 0;

    double operator[](int r) const { return entries.at(r).alpha; }
    const AlphaEntry& at(int r) const { return entries.at(r); }
};

struct AlphaOptions {
    double grid_step = 1e-3;
    double refine_step = 1e-6;
    double grid_span = 16.0;
    /// Exponent of 1.55 in the a_r′ denominator is max(r, floor_exponent).
    /// 3 follows the appendix; 0 gives the plain 1.55^r form.
    int floor_exponent = 3;
};

/// The bracket whose supremum over x defines a_r′.
inline double alpha_bracket(int r, double x, double a, int exponent) {
    const double lam_hi = lambda_mean(r + 1, x);
    const double denom = std::pow(1.55, exponent) - 1.0;
    const double q_hi = q(r + 1, r + 1, x);
    const double q_mid = q(r, r, x);
    return a - g(r, x, a) / lam_hi + 0.55 * lambda_mean(1, x) / (denom * lam_hi) * ((r + 1) * q_hi - r * q_mid);
}

/// Bound on q_{r+1,r+1} beyond x = r+16 times the bracket's prefactor.
inline double alpha_tail_bound(int r, int exponent, double span = 16.0) {
    const double x = r + span;
    // (x^{r+1}/(r+1)!) / (x^{16+r}/(16+r)!), in logs.
    const int top = r + static_cast<int>(span);
    const double log_ratio = (r + 1 - top) * std::log(x) + std::lgamma(top + 1.0) - std::lgamma(r + 2.0);
    return 0.55 * (r + 1) * std::exp(log_ratio) / (std::pow(1.55, exponent) - 1.0);
}

/// Sup of alpha_bracket over x ∈ [0, r+span], grid plus local refinement.
inline std::pair<double, double> alpha_supremum(int r, double a, int exponent, const AlphaOptions& opt) {
    const double hi = r + opt.grid_span;
    const auto steps = static_cast<long>(std::llround(hi / opt.grid_step));
    double best = -INFINITY, best_x = 0.0;
    for (long i = 0; i <= steps; ++i) {
        double x = std::min(hi, i * opt.grid_step);
        double v = alpha_bracket(r, x, a, exponent);
        if (v > best) {
            best = v;
            best_x = x;
        }
    }
    const double lo_r = std::max(0.0, best_x - opt.grid_step), hi_r = std::min(hi, best_x + opt.grid_step);
    const auto fine = static_cast<long>(std::llround((hi_r - lo_r) / opt.refine_step));
    for (long i = 0; i <= fine; ++i) {
        double x = std::min(hi_r, lo_r + i * opt.refine_step);
        double v = alpha_bracket(r, x, a, exponent);
        if (v > best) {
            best = v;
            best_x = x;
        }
    }
    return {best, best_x};
}

inline double alpha_upper_bound(int r) { return r <= 25 ? 1.551 : 1.552; }

/// α_2 = 1.55; α_{r+1} = max(α_r, a_r′) + 1e−5 for r ≤ 24, + 2^{−r} beyond.
inline AlphaTable compute_alphas(int r_max, const AlphaOptions& opt = {}) {
    if (r_max < 2) throw std::invalid_argument("compute_alphas: r_max must be at least 2");
    AlphaTable t;
    t.r_max = r_max;
    t.entries.resize(r_max + 1);
    t.entries[2].r = 2;
    t.entries[2].alpha = 1.55;
    t.entries[2].rule = "base";
    for (int r = 2; r <= r_max; ++r) {
        auto& e = t.entries[r];
        e.r = r;
        e.margin = alpha_upper_bound(r) - e.alpha;
        const int exponent = std::max(r, opt.floor_exponent);
        e.tail_bound = alpha_tail_bound(r, exponent, opt.grid_span);
        if (r == r_max) break;
        auto [sup, at] = alpha_supremum(r, e.alpha, exponent, opt);
        e.a_prime = sup;
        e.sup_lambda = at;
        auto& next = t.entries[r + 1];
        const bool small = r <= 24;
        next.alpha = std::max(e.alpha, sup) + (small ? 1e-5 : std::ldexp(1.0, -r));
        next.rule = small ? "+1e-5" : "+2^-r";
    }
    return t;
}

} // namespace kmatch

#endif
