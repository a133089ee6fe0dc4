#ifndef KMATCH_TINF_HPP
#define KMATCH_TINF_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <unordered_set>
#include <vector>

#include "kmatch/alphas.hpp"
#include "kmatch/error.hpp"
#include "kmatch/graph.hpp"
#include "kmatch/numerics.hpp"
#include "kmatch/rng.hpp"

namespace kmatch {

struct TinfConfig {
    bool trace = false;
    /// Steps between trace rows; 0 picks 1 for n ≤ 1e5 and 16 above.
    std::size_t stride = 0;
    /// τ′ and τ_ℓ stop when m_t ≤ n^edge_exponent ...
    double edge_exponent = 0.4 + 1e-5;
    /// ... or when ζ_t exceeds log^zeta_log_power n ...
    double zeta_log_power = 6.0;
    /// ... or (τ′ only) when no safe vertex has label ≥ min(tau_prime_label, k).
    int tau_prime_label = 3;
    /// Recount every bucket after this many steps (0 disables).
    std::size_t check_every = 0;
    /// Vertices served on a fixed schedule (the reserved set V_0); empty disables.
    std::vector<Vertex> priority;
    /// Every period-th step draws from `priority`; 0 means ⌈k^{-1}(n/|V_0|)^{1/2}⌉.
    std::size_t priority_period = 0;
};

struct TraceRow {
    std::uint64_t t = 0;
    std::uint64_t m = 0;
    std::uint64_t zeta = 0;
    int index = 0;
    std::uint32_t s = 0;
    std::uint32_t mult = 0;
    std::uint8_t h = 0;
    std::vector<double> p; // p_1..p_{k+1}
};

struct TinfTrace {
    int k = 0;
    std::uint64_t n = 0;
    std::uint64_t m0 = 0;
    std::size_t max_degree = 0;
    std::vector<TraceRow> rows;
    /// ζ_t for every step t < τ (filled when tracing).
    std::vector<std::uint64_t> zeta;
    std::uint64_t tau = 0;
    std::optional<std::uint64_t> tau_prime;
    std::vector<std::optional<std::uint64_t>> tau_ell; // indexed by ℓ, 2 ≤ ℓ ≤ k
    std::uint64_t t_star = 0;
    std::vector<double> p_at_t_star;
    // Totals for the ledger inequality.
    std::uint64_t sum_s = 0, sum_mult = 0, sum_h = 0;
    std::uint64_t raw_size = 0;   // |M| before loops and repeats are stripped
    std::uint64_t loops = 0, repeats = 0;
    std::uint64_t half_edge_touches = 0;
    std::uint64_t priority_picks = 0;
    /// First scheduled step at which every priority vertex had degree 0.
    std::optional<std::uint64_t> priority_cleared;
    std::uint64_t bucket_checks = 0;
};

struct TinfResult {
    std::vector<VertexPair> matching; // loops and repeated pairs removed
    TinfTrace trace;
};

struct StepInfo {
    Vertex v = 0, w = 0;
    std::uint32_t s = 0, mult = 0;
    std::uint8_t h = 0;
};

/// State of the greedy k-matching: labels, bucket membership Y_{ℓ,j}, and the raw matching.
class TinfState {
public:
    TinfState(MultiGraph g, int k) : g_(std::move(g)), k_(k) {
        if (k < 1) throw std::invalid_argument("tinf: k must be at least 1");
        const auto n = g_.num_vertices();
        dmax_ = g_.max_degree();
        label_.assign(n, static_cast<std::uint8_t>(k));
        matched_.assign(n, 0);
        slot_.assign(n, 0);
        loss_.assign(n, 0);
        before_.assign(n, 0);
        bucket_.assign(k + 1, std::vector<std::vector<Vertex>>(dmax_ + 1));
        weight_.assign(k + 1, 0);
        count_.assign(k + 1, 0);
        for (Vertex v = 0; v < n; ++v) insert(v);
    }

    const MultiGraph& graph() const { return g_; }
    int k() const { return k_; }
    std::size_t max_degree() const { return dmax_; }
    int label(Vertex v) const { return label_[v]; }
    std::size_t degree(Vertex v) const { return g_.degree(v); }
    std::uint64_t m() const { return g_.num_edges(); }
    bool done() const { return g_.num_edges() == 0; }
    std::size_t bucket_size(int ell, std::size_t j) const { return j <= dmax_ ? bucket_[ell][j].size() : 0; }
    const std::vector<VertexPair>& raw_matching() const { return raw_; }
    /// Matched slots used at v; a loop uses one.
    std::uint32_t matched_degree(Vertex v) const { return matched_[v]; }

    std::uint64_t zeta() const {
        std::uint64_t z = 0;
        for (int l = 1; l <= k_; ++l)
            for (std::size_t j = 1; j <= std::min<std::size_t>(l, dmax_); ++j) z += j * bucket_[l][j].size();
        return z;
    }

    /// Largest label carrying a positive-degree vertex.
    int index() const {
        for (int l = k_; l >= 1; --l)
            if (weight_[l] > 0) return l;
        return 0;
    }

    /// Vertices in Y_ℓ, i.e. label ℓ and degree at least ℓ+1.
    std::uint64_t safe_count(int ell) const {
        std::uint64_t c = count_[ell];
        for (std::size_t j = 0; j <= std::min<std::size_t>(ell, dmax_); ++j) c -= bucket_[ell][j].size();
        return c;
    }

    /// p_1..p_k are the half-edge masses of Y_1..Y_k over 2m_t; p_{k+1} is the
    /// dangerous mass ζ_t/2m_t, so the entries sum to one.
    std::vector<double> p_vector() const {
        if (m() == 0) throw std::invalid_argument("p_vector: no edges left");
        std::vector<double> p(k_ + 1, 0.0);
        const double twom = 2.0 * static_cast<double>(m());
        for (int l = 1; l <= k_; ++l) {
            std::uint64_t danger = 0;
            for (std::size_t j = 1; j <= std::min<std::size_t>(l, dmax_); ++j) danger += j * bucket_[l][j].size();
            p[l - 1] = static_cast<double>(weight_[l] - danger) / twom;
        }
        p[k_] = static_cast<double>(zeta()) / twom;
        return p;
    }

    /// Σ_{ℓ,j} j |Y_{ℓ,j}|, which must equal 2m_t.
    std::uint64_t bucket_half_edges() const {
        std::uint64_t s = 0;
        for (int l = 0; l <= k_; ++l)
            for (std::size_t j = 0; j <= dmax_; ++j) s += j * bucket_[l][j].size();
        return s;
    }

    /// Constraint lists of the current state: L^i(j) = |Y_{i,j}| for j ≤ i, L^i(i+1) = |Y_i|.
    DegreeConstraint degree_constraint() const {
        auto dc = DegreeConstraint::empty(k_);
        for (int i = 0; i <= k_; ++i) {
            for (int j = 0; j <= i; ++j) dc.L[i][j] = bucket_size(i, j);
            dc.L[i][i + 1] = safe_count(i);
        }
        return dc;
    }

    Vertex select_vertex(Rng& rng) const {
        const std::uint64_t z = zeta();
        if (z > 0) {
            std::uint64_t r = rng.below(z);
            for (int l = 1; l <= k_; ++l)
                for (std::size_t j = 1; j <= std::min<std::size_t>(l, dmax_); ++j) {
                    const std::uint64_t w = j * bucket_[l][j].size();
                    if (r < w) return bucket_[l][j][r / j];
                    r -= w;
                }
        }
        const int l = index();
        if (l == 0 || weight_[l] == 0) throw InvariantError("select_vertex: no positive-degree vertex while edges remain");
        std::uint64_t r = rng.below(weight_[l]);
        for (std::size_t j = 1; j <= dmax_; ++j) {
            const std::uint64_t w = j * bucket_[l][j].size();
            if (r < w) return bucket_[l][j][r / j];
            r -= w;
        }
        throw InvariantError("select_vertex: label weight disagrees with buckets");
    }

    /// One loop iteration with v_t = v.
    StepInfo step(Vertex v, Rng& rng) {
        StepInfo info;
        auto [e, w] = g_.random_incident(v, rng);
        info.v = v;
        info.w = w;
        info.h = v == w;
        raw_.emplace_back(v, w);
        remove_edge(e);
        relabel(v);
        if (w != v) relabel(w);
        cascade(v);
        if (w != v) cascade(w);
        for (Vertex u : touched_) {
            const std::uint32_t lost = loss_[u];
            loss_[u] = 0;
            if (label_[u] == 0) continue;
            if (u == v || u == w || lost >= 2) info.mult += lost;
            else if (before_[u] >= 1 && before_[u] <= label_[u]) ++info.s;
        }
        touched_.clear();
        return info;
    }

    /// Recounts buckets from (label, degree) and checks l + d_M = k everywhere.
    bool check_consistency() const {
        std::vector<std::uint64_t> w(k_ + 1, 0), c(k_ + 1, 0);
        for (Vertex v = 0; v < g_.num_vertices(); ++v) {
            const auto d = g_.degree(v);
            const int l = label_[v];
            if (l + matched_[v] != static_cast<std::uint32_t>(k_)) return false;
            if (l == 0 && d != 0) return false;
            if (d > dmax_ || slot_[v] >= bucket_[l][d].size() || bucket_[l][d][slot_[v]] != v) return false;
            w[l] += d;
            ++c[l];
        }
        std::size_t members = 0;
        for (int l = 0; l <= k_; ++l)
            for (std::size_t j = 0; j <= dmax_; ++j) members += bucket_[l][j].size();
        return w == weight_ && c == count_ && members == g_.num_vertices() && bucket_half_edges() == 2 * m();
    }

private:
    void insert(Vertex v) {
        auto& b = bucket_[label_[v]][g_.degree(v)];
        slot_[v] = static_cast<std::uint32_t>(b.size());
        b.push_back(v);
        weight_[label_[v]] += g_.degree(v);
        ++count_[label_[v]];
    }

    void erase(Vertex v) {
        auto& b = bucket_[label_[v]][g_.degree(v)];
        Vertex last = b.back();
        b[slot_[v]] = last;
        slot_[last] = slot_[v];
        b.pop_back();
        weight_[label_[v]] -= g_.degree(v);
        --count_[label_[v]];
    }

    void remove_edge(EdgeRef e) {
        auto [a, b] = g_.endpoints(e);
        erase(a);
        if (b != a) erase(b);
        g_.delete_edge(e);
        insert(a);
        if (b != a) insert(b);
    }

    void relabel(Vertex v) {
        erase(v);
        --label_[v];
        ++matched_[v];
        insert(v);
    }

    void cascade(Vertex x) {
        if (label_[x] != 0) return;
        while (g_.degree(x) > 0) {
            auto [e, u] = g_.last_incident(x);
            if (u != x) {
                if (loss_[u] == 0) {
                    touched_.push_back(u);
                    before_[u] = static_cast<std::uint32_t>(g_.degree(u));
                }
                ++loss_[u];
            }
            remove_edge(e);
        }
    }

    MultiGraph g_;
    int k_;
    std::size_t dmax_ = 0;
    std::vector<std::uint8_t> label_;
    std::vector<std::uint32_t> matched_;
    std::vector<std::vector<std::vector<Vertex>>> bucket_; // bucket_[ℓ][j]
    std::vector<std::uint32_t> slot_;
    std::vector<std::uint64_t> weight_; // Σ_j j |Y_{ℓ,j}|
    std::vector<std::uint64_t> count_;  // Σ_j |Y_{ℓ,j}|
    std::vector<VertexPair> raw_;
    std::vector<std::uint32_t> loss_, before_;
    std::vector<Vertex> touched_;
};

/// Drops loops and repeated pairs, keeping first occurrences.
inline std::vector<VertexPair> strip_matching(const std::vector<VertexPair>& raw, std::uint64_t* loops = nullptr,
                                              std::uint64_t* repeats = nullptr) {
    std::vector<VertexPair> out;
    std::unordered_set<std::uint64_t> seen;
    for (auto [u, v] : raw) {
        if (u == v) {
            if (loops) ++*loops;
            continue;
        }
        if (!seen.insert(pair_key(u, v)).second) {
            if (repeats) ++*repeats;
            continue;
        }
        out.emplace_back(std::min(u, v), std::max(u, v));
    }
    return out;
}

/// Degree-proportional draws from a fixed vertex list, by rejection against the
/// initial maximum degree; zero-degree members are dropped as they are met.
class PriorityPool {
public:
    PriorityPool(std::vector<Vertex> members, std::size_t dmax) : members_(std::move(members)), dmax_(dmax) {}

    std::optional<Vertex> draw(const MultiGraph& g, Rng& rng) {
        while (!members_.empty()) {
            const std::size_t i = rng.below(members_.size());
            const Vertex u = members_[i];
            const auto d = g.degree(u);
            if (d == 0) {
                members_[i] = members_.back();
                members_.pop_back();
                continue;
            }
            if (rng.below(dmax_) < d) return u;
        }
        return std::nullopt;
    }

private:
    std::vector<Vertex> members_;
    std::size_t dmax_;
};

/// The greedy k-matching (with the optional fixed schedule for a priority set).
inline TinfResult run(MultiGraph g, int k, Rng& rng, const TinfConfig& cfg = {}) {
    TinfResult res;
    TinfTrace& tr = res.trace;
    tr.k = k;
    tr.n = g.num_vertices();
    tr.m0 = g.num_edges();
    TinfState st(std::move(g), k);
    tr.max_degree = st.max_degree();

    const double n = static_cast<double>(std::max<std::uint64_t>(tr.n, 1));
    const double c = tr.n ? static_cast<double>(tr.m0) / n : 0.0;
    tr.t_star = c > 0 ? static_cast<std::uint64_t>(std::floor(std::pow(1.0 / (40.0 * c * k), 4) * n)) : 0;
    const double m_stop = std::pow(n, cfg.edge_exponent);
    const double z_stop = std::pow(std::log(n), cfg.zeta_log_power);
    const int tp_label = std::min(cfg.tau_prime_label, k);
    const std::size_t stride = cfg.stride ? cfg.stride : (tr.n <= 100000 ? 1 : 16);
    tr.tau_ell.assign(k + 1, std::nullopt);

    std::optional<PriorityPool> pool;
    std::size_t period = 0;
    if (!cfg.priority.empty()) {
        pool.emplace(cfg.priority, std::max<std::size_t>(st.max_degree(), 1));
        period = cfg.priority_period
                     ? cfg.priority_period
                     : static_cast<std::size_t>(std::ceil(std::sqrt(n / cfg.priority.size()) / k));
        period = std::max<std::size_t>(period, 1);
    }

    for (std::uint64_t t = 0; !st.done(); ++t) {
        std::uint64_t zeta_t = 0;
        int index_t = 0;
        if (cfg.trace) {
            zeta_t = st.zeta();
            index_t = st.index();
            tr.zeta.push_back(zeta_t);
            const auto mt = static_cast<double>(st.m());
            // Highest label with a safe vertex.
            int top_safe = 0;
            for (int l = k; l >= 1; --l)
                if (st.safe_count(l) > 0) {
                    top_safe = l;
                    break;
                }
            const bool small = mt <= m_stop;
            if (!tr.tau_prime && (small || zeta_t > z_stop || top_safe < tp_label)) tr.tau_prime = t;
            for (int l = 2; l <= k; ++l)
                if (!tr.tau_ell[l] && (top_safe < l || small || zeta_t >= z_stop)) tr.tau_ell[l] = t;
            if (t == tr.t_star) tr.p_at_t_star = st.p_vector();
        }

        Vertex v;
        std::optional<Vertex> pv;
        if (pool && t % period == period - 1) {
            pv = pool->draw(st.graph(), rng);
            if (!pv && !tr.priority_cleared) tr.priority_cleared = t;
        }
        if (pv) {
            v = *pv;
            ++tr.priority_picks;
        } else {
            v = st.select_vertex(rng);
        }
        std::vector<double> p;
        if (cfg.trace && t % stride == 0) p = st.p_vector();
        const std::uint64_t m_t = st.m();
        const StepInfo info = st.step(v, rng);
        tr.sum_s += info.s;
        tr.sum_mult += info.mult;
        tr.sum_h += info.h;
        if (cfg.trace && t % stride == 0)
            tr.rows.push_back({t, m_t, zeta_t, index_t, info.s, info.mult, info.h, std::move(p)});
        if (cfg.check_every && (t + 1) % cfg.check_every == 0) {
            ++tr.bucket_checks;
            if (!st.check_consistency()) throw InvariantError("tinf: bucket or label consistency lost at step " + std::to_string(t));
        }
        tr.tau = t + 1;
    }
    if (cfg.check_every && !st.check_consistency()) throw InvariantError("tinf: final consistency check failed");
    tr.half_edge_touches = st.graph().half_edge_touches();
    tr.raw_size = st.raw_matching().size();
    res.matching = strip_matching(st.raw_matching(), &tr.loops, &tr.repeats);
    return res;
}

/// run() with V_0 served every ⌈k^{-1}(n/|V_0|)^{1/2}⌉-th step.
inline TinfResult run_tinf_with_priority(MultiGraph g, const std::vector<Vertex>& v0, int k, Rng& rng,
                                         TinfConfig cfg = {}) {
    cfg.priority = v0;
    return run(std::move(g), k, rng, cfg);
}

/// True iff p_r ≥ α_r p_{r−1} for 2 ≤ r ≤ d−1 (p given as p_1, p_2, ...).
inline bool in_polyhedron(const std::vector<double>& p, int d, const AlphaTable& alphas) {
    if (d < 2 || static_cast<std::size_t>(d - 1) > p.size()) throw std::invalid_argument("in_polyhedron: d out of range");
    for (int r = 2; r <= d - 1; ++r)
        if (p[r - 1] < alphas[r] * p[r - 2]) return false;
    return true;
}

struct DriftWindow {
    std::uint64_t start = 0;
    std::uint64_t count = 0; // steps with ζ_t > 0
    double mean = 0.0;
};

struct DriftReport {
    std::vector<DriftWindow> windows;
    std::uint64_t max_abs_increment = 0;
    double fraction_nonpositive() const {
        if (windows.empty()) return 1.0;
        std::size_t c = 0;
        for (const auto& w : windows) c += w.mean <= 0;
        return static_cast<double>(c) / windows.size();
    }
};

/// Windowed means of ζ_{t+1} − ζ_t over steps with ζ_t > 0, before τ′.
inline DriftReport drift_report(const TinfTrace& tr, std::uint64_t window = 10000) {
    DriftReport rep;
    const auto& z = tr.zeta;
    for (std::uint64_t t = 0; t < z.size(); ++t) {
        const std::uint64_t next = t + 1 < z.size() ? z[t + 1] : 0;
        rep.max_abs_increment = std::max(rep.max_abs_increment, next > z[t] ? next - z[t] : z[t] - next);
    }
    const std::uint64_t end = std::min<std::uint64_t>(tr.tau_prime.value_or(z.size()), z.size());
    for (std::uint64_t s = 0; s < end; s += window) {
        DriftWindow w{s, 0, 0.0};
        double sum = 0;
        for (std::uint64_t t = s; t < std::min(end, s + window); ++t) {
            if (z[t] == 0) continue;
            const std::uint64_t next = t + 1 < z.size() ? z[t + 1] : 0;
            sum += static_cast<double>(next) - static_cast<double>(z[t]);
            ++w.count;
        }
        if (w.count == 0) continue;
        w.mean = sum / w.count;
        rep.windows.push_back(w);
    }
    return rep;
}

} // namespace kmatch

#endif
