#ifndef KMATCH_NUMERICS_HPP
#define KMATCH_NUMERICS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kmatch/error.hpp"

namespace kmatch {

/// Σ_{i≥k} x^i/i! in 80-bit precision.
inline long double poisson_tail_series(int k, long double x) {
    long double term = 1.0L;
    for (int i = 1; i <= k; ++i) term *= x / i;
    if (term == 0.0L) return 0.0L;
    long double sum = term;
    for (int i = k + 1;; ++i) {
        term *= x / i;
        sum += term;
        if (term < 1e-18L * sum && i > x) break;
    }
    return sum;
}

/// f_k(λ) = e^λ − Σ_{i<k} λ^i/i!.
inline double f(int k, double lambda) {
    if (k <= 0) return std::exp(lambda);
    if (lambda == 0.0) return 0.0;
    if (lambda < k) return static_cast<double>(poisson_tail_series(k, lambda));
    long double head = 0.0L, term = 1.0L;
    for (int i = 0; i < k; ++i) {
        head += term;
        term *= static_cast<long double>(lambda) / (i + 1);
    }
    return static_cast<double>(std::exp(static_cast<long double>(lambda)) - head);
}

/// S_ℓ(x) = Σ_{i≥0} x^i ℓ!/(ℓ+i)!, so that P(Po_{≥ℓ}(x) = ℓ) = 1/S_ℓ(x).
inline double floor_series(int ell, double x) {
    double term = 1.0, sum = 1.0;
    for (int i = 1;; ++i) {
        term *= x / (ell + i);
        sum += term;
        if (term < 1e-18 * sum && ell + i > x) break;
    }
    return sum;
}

/// P(Po_{≥ℓ}(x) = ℓ), the mass at the floor.
inline double floor_mass(int ell, double x) {
    if (x == 0.0) return 1.0;
    if (x > 600.0) return std::exp(-x + ell * std::log(x) - std::lgamma(ell + 1.0));
    return 1.0 / floor_series(ell, x);
}

/// λ_ℓ(x): mean of Poisson(x) conditioned on being at least ℓ.
inline double lambda_mean(int ell, double x) {
    if (ell <= 0) return x;
    return x + ell * floor_mass(ell, x);
}

/// P(Po_{≥ℓ}(x) = r).
inline double truncated_poisson_pmf(int ell, int r, double x) {
    if (r < ell) return 0.0;
    if (x == 0.0) return r == ell ? 1.0 : 0.0;
    double p = floor_mass(ell, x);
    for (int t = ell + 1; t <= r; ++t) p *= x / t;
    return p;
}

/// q_{ℓ,r}(x) = r P(Po_{≥ℓ}(x) = r) / λ_ℓ(x).
inline double q(int ell, int r, double x) {
    if (r < ell) return 0.0;
    return r * truncated_poisson_pmf(ell, r, x) / lambda_mean(ell, x);
}

/// g(r,x) = a λ_{r+1} − (a+1) λ_r + λ_{r−1}. The x parts cancel exactly, so
/// the sum is taken over the floor-mass terms only.
inline double g(int r, double x, double a) {
    double rho_hi, rho_mid, rho_lo;
    if (x > 600.0) {
        rho_hi = floor_mass(r + 1, x);
        rho_mid = floor_mass(r, x);
        rho_lo = floor_mass(r - 1, x);
    } else {
        double s_hi = floor_series(r + 1, x);
        double s_mid = 1.0 + x / (r + 1) * s_hi;
        double s_lo = 1.0 + x / r * s_mid;
        rho_hi = 1.0 / s_hi;
        rho_mid = 1.0 / s_mid;
        rho_lo = 1.0 / s_lo;
    }
    return a * (r + 1) * rho_hi - (a + 1) * r * rho_mid + (r - 1) * rho_lo;
}

/// Vertex classes of the constrained sequence model. L[i][j] for 0 ≤ i ≤ k,
/// 0 ≤ j ≤ i+1 counts vertices with label i whose degree is exactly j (j ≤ i)
/// or at least i+1 (j = i+1).
struct DegreeConstraint {
    int k = 0;
    std::vector<std::vector<std::uint64_t>> L;
    /// Optional per-vertex cell; when empty, cells are assigned in (i, j) order.
    std::vector<std::pair<int, int>> y;

    static DegreeConstraint empty(int k) {
        DegreeConstraint dc;
        dc.k = k;
        dc.L.resize(k + 1);
        for (int i = 0; i <= k; ++i) dc.L[i].assign(i + 2, 0);
        return dc;
    }

    static DegreeConstraint all_free(std::uint64_t n, int k) {
        auto dc = empty(k);
        dc.L[k][k + 1] = n;
        return dc;
    }

    std::uint64_t n() const {
        std::uint64_t s = 0;
        for (const auto& row : L)
            for (auto c : row) s += c;
        return s;
    }

    /// R = Σ_i Σ_{j≤i} j L^i(j), the degree already fixed.
    std::uint64_t fixed_degree() const {
        std::uint64_t r = 0;
        for (int i = 0; i <= k; ++i)
            for (int j = 0; j <= i; ++j) r += static_cast<std::uint64_t>(j) * L[i][j];
        return r;
    }

    std::uint64_t free_count() const {
        std::uint64_t s = 0;
        for (int i = 0; i <= k; ++i) s += L[i][i + 1];
        return s;
    }

    /// Σ_i (i+1) L^i(i+1), the least degree the free vertices can take.
    std::uint64_t free_floor_sum() const {
        std::uint64_t s = 0;
        for (int i = 0; i <= k; ++i) s += static_cast<std::uint64_t>(i + 1) * L[i][i + 1];
        return s;
    }

    void validate() const {
        if (k < 0 || L.size() != static_cast<std::size_t>(k + 1))
            throw std::invalid_argument("degree constraint: need k+1 lists");
        for (int i = 0; i <= k; ++i)
            if (L[i].size() != static_cast<std::size_t>(i + 2))
                throw std::invalid_argument("degree constraint: list " + std::to_string(i) + " must have " +
                                            std::to_string(i + 2) + " entries");
        if (y.empty()) return;
        if (y.size() != n()) throw std::invalid_argument("degree constraint: mapping size differs from n");
        auto counts = empty(k).L;
        for (auto [i, j] : y) {
            if (i < 0 || i > k || j < 0 || j > i + 1)
                throw std::invalid_argument("degree constraint: mapping cell out of range");
            ++counts[i][j];
        }
        if (counts != L) throw std::invalid_argument("degree constraint: mapping disagrees with counts");
    }

    /// Per-vertex cells, explicit or canonical.
    std::vector<std::pair<int, int>> cells() const {
        if (!y.empty()) return y;
        std::vector<std::pair<int, int>> out;
        out.reserve(n());
        for (int i = 0; i <= k; ++i)
            for (int j = 0; j <= i + 1; ++j)
                for (std::uint64_t c = 0; c < L[i][j]; ++c) out.emplace_back(i, j);
        return out;
    }
};

struct LambdaSolution {
    double lambda = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

/// Σ_i L^i(i+1) · λ_{i+1}(x): expected free degree when free vertices are
/// Poisson(x) truncated at their floors.
inline double lambda_equation_lhs(const DegreeConstraint& dc, double x) {
    double s = 0.0;
    for (int i = 0; i <= dc.k; ++i)
        if (dc.L[i][i + 1] > 0) s += static_cast<double>(dc.L[i][i + 1]) * lambda_mean(i + 1, x);
    return s;
}

/// Root of Σ_i L^i(i+1) λ_{i+1}(x) = 2m − R.
inline LambdaSolution solve_lambda(const DegreeConstraint& dc, std::uint64_t m) {
    dc.validate();
    const std::uint64_t R = dc.fixed_degree();
    const std::uint64_t free = dc.free_count();
    if (free == 0) throw InfeasibleError("solve_lambda: no free vertices");
    if (2 * m < R || 2 * m - R < dc.free_floor_sum())
        throw InfeasibleError("solve_lambda: 2m - R is below the free vertices' degree floor");
    const double target = static_cast<double>(2 * m - R);
    const double tol = 1e-12 * std::max(1.0, target);

    LambdaSolution sol;
    double lo = 0.0, hi = 2.0 * target / static_cast<double>(free) + dc.k + 1;
    double flo = lambda_equation_lhs(dc, lo) - target;
    if (std::fabs(flo) <= tol) {
        sol.residual = std::fabs(flo);
        return sol;
    }
    double fhi = lambda_equation_lhs(dc, hi) - target;
    KMATCH_CHECK(flo < 0 && fhi > 0, "solve_lambda: bracket does not straddle the root");
    while (hi - lo > 1e-15 * std::max(1.0, hi) && sol.iterations < 200) {
        double mid = 0.5 * (lo + hi);
        double fm = lambda_equation_lhs(dc, mid) - target;
        ++sol.iterations;
        if (fm == 0.0) {
            lo = hi = mid;
            break;
        }
        if (fm < 0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    double x = 0.5 * (lo + hi);
    double fx = lambda_equation_lhs(dc, x) - target;
    for (int it = 0; it < 3 && std::fabs(fx) > tol; ++it) {
        double h = std::max(1e-7, 1e-7 * x);
        double d = (lambda_equation_lhs(dc, x + h) - lambda_equation_lhs(dc, std::max(0.0, x - h))) /
                   (x + h - std::max(0.0, x - h));
        if (!(d > 0)) break;
        double nx = std::clamp(x - fx / d, lo, hi);
        double nf = lambda_equation_lhs(dc, nx) - target;
        ++sol.iterations;
        if (std::fabs(nf) >= std::fabs(fx)) break;
        x = nx;
        fx = nf;
    }
    sol.lambda = x;
    sol.residual = std::fabs(fx);
    return sol;
}

} // namespace kmatch

#endif
