#ifndef KMATCH_GENERATE_HPP
#define KMATCH_GENERATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <boost/random/binomial_distribution.hpp>

#include "kmatch/error.hpp"
#include "kmatch/graph.hpp"
#include "kmatch/numerics.hpp"
#include "kmatch/rng.hpp"

namespace kmatch {

/// log f_ℓ(λ), finite for every λ > 0.
inline double log_f(int ell, double lambda) {
    if (ell <= 0) return lambda;
    if (lambda < ell + 1.0) return static_cast<double>(std::log(poisson_tail_series(ell, lambda)));
    double head = 0.0;
    const double ll = std::log(lambda);
    for (int i = 0; i < ell; ++i) head += std::exp(-lambda + i * ll - std::lgamma(i + 1.0));
    return lambda + std::log1p(-head);
}

/// Inversion sampler for Po_{≥ℓ}(λ): P(t) = λ^t / (t! f_ℓ(λ)) for t ≥ ℓ.
class TruncatedPoisson {
public:
    TruncatedPoisson(double lambda, int floor) : lambda_(lambda), floor_(floor) {
        if (lambda < 0 || floor < 0) throw std::invalid_argument("truncated Poisson: need lambda >= 0, floor >= 0");
        if (lambda == 0.0) return;
        const double lf = log_f(floor, lambda), ll = std::log(lambda);
        const int top = floor + static_cast<int>(lambda + 40.0 * std::sqrt(lambda) + 40.0);
        double acc = 0.0;
        for (int t = floor; t <= top; ++t) {
            acc += std::exp(t * ll - std::lgamma(t + 1.0) - lf);
            cdf_.push_back(acc);
            if (1.0 - acc < 1e-17 && t > lambda) break;
        }
    }

    int operator()(Rng& rng) const {
        if (cdf_.empty()) return floor_;
        const double u = rng.uniform();
        auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
        if (it != cdf_.end()) return floor_ + static_cast<int>(it - cdf_.begin());
        // Beyond the table (mass below 1e−17): continue the recursion.
        int t = floor_ + static_cast<int>(cdf_.size()) - 1;
        double p = std::exp(t * std::log(lambda_) - std::lgamma(t + 1.0) - log_f(floor_, lambda_));
        double acc = cdf_.back();
        while (acc <= u && p > 0) {
            ++t;
            p *= lambda_ / t;
            acc += p;
        }
        return t;
    }

    double lambda() const { return lambda_; }
    int floor() const { return floor_; }

    /// Point masses from the floor up to where the tail drops below 1e−17.
    std::vector<double> pmf() const {
        if (cdf_.empty()) return {1.0};
        std::vector<double> out(cdf_.size());
        std::adjacent_difference(cdf_.begin(), cdf_.end(), out.begin());
        return out;
    }

private:
    double lambda_;
    int floor_;
    std::vector<double> cdf_;
};

inline int sample_truncated_poisson(double lambda, int floor, Rng& rng) { return TruncatedPoisson(lambda, floor)(rng); }

struct GenerateOptions {
    bool simple = false;
    /// With `simple`: remove loops and repeated pairs by degree-preserving
    /// double-edge switches instead of rejecting the whole pairing.
    bool switching = false;
    /// Rejection attempts for the degree sum; 0 means 10·√m.
    std::uint64_t sum_budget = 0;
    std::uint64_t simple_budget = 1000;
};

struct GenerateStats {
    double lambda = 0.0;
    std::uint64_t sum_attempts = 0;
    bool repaired = false;
    std::uint64_t repair_steps = 0;
    std::uint64_t simple_attempts = 0;
    std::uint64_t switches = 0;
};

namespace detail {

/// Free vertices sharing one floor are iid, so their degree multiset is a
/// multinomial draw; only the counts are needed to test the sum.
struct FloorGroup {
    int floor = 0;
    std::vector<std::size_t> vertices;
    std::vector<double> pmf; // pmf[t − floor]
    std::vector<std::uint64_t> counts;

    std::uint64_t draw(Rng& rng) {
        counts.assign(pmf.size(), 0);
        std::uint64_t left = vertices.size(), sum = 0;
        double mass = 1.0;
        for (std::size_t i = 0; i < pmf.size() && left > 0; ++i) {
            std::uint64_t c = left;
            if (i + 1 < pmf.size() && pmf[i] < mass) {
                boost::random::binomial_distribution<std::int64_t, double> bin(static_cast<std::int64_t>(left),
                                                                               std::clamp(pmf[i] / mass, 0.0, 1.0));
                c = static_cast<std::uint64_t>(bin(rng));
            }
            counts[i] = c;
            left -= c;
            sum += c * static_cast<std::uint64_t>(floor + static_cast<int>(i));
            mass -= pmf[i];
        }
        return sum;
    }

    void assign(std::vector<std::uint32_t>& deg, Rng& rng) const {
        std::vector<std::uint32_t> values;
        values.reserve(vertices.size());
        for (std::size_t i = 0; i < counts.size(); ++i) values.insert(values.end(), counts[i], floor + static_cast<std::uint32_t>(i));
        rng.shuffle(values);
        for (std::size_t i = 0; i < vertices.size(); ++i) deg[vertices[i]] = values[i];
    }
};

} // namespace detail

/// Degree sequence for a constraint, conditioned on summing to 2m.
inline std::vector<std::uint32_t> sample_degree_sequence(const DegreeConstraint& dc, std::uint64_t m, Rng& rng,
                                                         const GenerateOptions& opt = {},
                                                         GenerateStats* stats = nullptr) {
    const auto cells = dc.cells();
    const auto n = cells.size();
    const std::uint64_t target = 2 * m;
    std::vector<std::uint32_t> deg(n, 0);

    std::uint64_t fixed_sum = 0;
    std::map<int, detail::FloorGroup> groups;
    for (std::size_t v = 0; v < n; ++v) {
        auto [i, j] = cells[v];
        if (j == i + 1) {
            groups[j].vertices.push_back(v);
        } else {
            deg[v] = static_cast<std::uint32_t>(j);
            fixed_sum += static_cast<std::uint64_t>(j);
        }
    }
    if (groups.empty()) {
        if (fixed_sum != target) throw InfeasibleError("all degrees fixed and their sum differs from 2m");
        return deg;
    }

    const LambdaSolution sol = solve_lambda(dc, m);
    if (stats) stats->lambda = sol.lambda;
    std::map<int, TruncatedPoisson> samplers;
    for (auto& [j, grp] : groups) {
        grp.floor = j;
        const auto& sampler = samplers.try_emplace(j, sol.lambda, j).first->second;
        grp.pmf = sampler.pmf();
    }

    const std::uint64_t budget =
        opt.sum_budget ? opt.sum_budget : static_cast<std::uint64_t>(std::ceil(10.0 * std::sqrt(double(std::max<std::uint64_t>(m, 1)))));
    std::uint64_t sum = 0;
    for (std::uint64_t attempt = 1; attempt <= budget; ++attempt) {
        sum = fixed_sum;
        for (auto& [j, grp] : groups) sum += grp.draw(rng);
        if (stats) stats->sum_attempts = attempt;
        if (sum == target) break;
    }
    for (auto& [j, grp] : groups) grp.assign(deg, rng);
    if (sum == target) return deg;

    // Budget exhausted: random walk on the sum by resampling single free vertices.
    if (stats) stats->repaired = true;
    std::vector<std::size_t> free_vertices;
    for (auto& [j, grp] : groups) free_vertices.insert(free_vertices.end(), grp.vertices.begin(), grp.vertices.end());
    auto gap = [&](std::uint64_t s) { return s > target ? s - target : target - s; };
    while (sum != target) {
        std::size_t v = free_vertices[rng.below(free_vertices.size())];
        auto fresh = static_cast<std::uint32_t>(samplers.at(cells[v].second)(rng));
        std::uint64_t next = sum - deg[v] + fresh;
        if (gap(next) <= gap(sum)) {
            sum = next;
            deg[v] = fresh;
        }
        if (stats) ++stats->repair_steps;
    }
    return deg;
}

/// Uniform pairing of the half-edges of a degree sequence.
inline MultiGraph pair_half_edges(const std::vector<std::uint32_t>& deg, Rng& rng) {
    std::vector<Vertex> half;
    for (Vertex v = 0; v < deg.size(); ++v) half.insert(half.end(), deg[v], v);
    if (half.size() % 2) throw InfeasibleError("odd degree sum");
    rng.shuffle(half);
    std::vector<VertexPair> pairs;
    pairs.reserve(half.size() / 2);
    for (std::size_t i = 0; i + 1 < half.size(); i += 2) pairs.emplace_back(half[i], half[i + 1]);
    return MultiGraph::from_edge_list(deg.size(), pairs);
}

inline bool is_simple(const MultiGraph& g) {
    std::unordered_set<std::uint64_t> seen;
    for (auto [u, v] : g.edge_list()) {
        if (u == v) return false;
        if (!seen.insert(pair_key(u, v)).second) return false;
    }
    return true;
}

/// Rewires each loop or repeated pair {a,b} with a uniform edge {c,d} into
/// {a,c},{b,d} whenever that creates neither a loop nor a repeat. Degrees are kept.
inline std::uint64_t make_simple_by_switching(std::vector<VertexPair>& edges, Rng& rng,
                                              std::uint64_t max_switches = 0) {
    std::unordered_map<std::uint64_t, std::uint32_t> mult;
    for (auto [u, v] : edges) ++mult[pair_key(u, v)];
    auto bad = [&](std::size_t i) { return edges[i].first == edges[i].second || mult[pair_key(edges[i].first, edges[i].second)] > 1; };
    if (max_switches == 0) max_switches = 1000 * (edges.size() + 1);
    std::uint64_t switches = 0, tries = 0;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        while (bad(i)) {
            if (++tries > max_switches) throw InfeasibleError("switching did not reach a simple graph");
            const std::size_t j = rng.below(edges.size());
            if (j == i) continue;
            auto [a, b] = edges[i];
            auto [c, d] = edges[j];
            if (rng.below(2)) std::swap(c, d);
            if (a == c || b == d || mult.count(pair_key(a, c)) || mult.count(pair_key(b, d)) || pair_key(a, c) == pair_key(b, d))
                continue;
            for (auto [x, y] : {edges[i], edges[j]})
                if (--mult[pair_key(x, y)] == 0) mult.erase(pair_key(x, y));
            edges[i] = {a, c};
            edges[j] = {b, d};
            ++mult[pair_key(a, c)];
            ++mult[pair_key(b, d)];
            ++switches;
            // Edge j may have been the last bad one before i; rescan from it.
            if (j < i) i = j;
        }
    }
    return switches;
}

inline MultiGraph sample_constrained_sequence(const DegreeConstraint& dc, std::uint64_t m, Rng& rng,
                                              const GenerateOptions& opt = {}, GenerateStats* stats = nullptr) {
    dc.validate();
    for (std::uint64_t attempt = 1;; ++attempt) {
        if (stats) stats->simple_attempts = attempt;
        auto deg = sample_degree_sequence(dc, m, rng, opt, stats);
        auto g = pair_half_edges(deg, rng);
        if (!opt.simple || is_simple(g)) return g;
        if (opt.switching) {
            auto edges = g.edge_list();
            const auto sw = make_simple_by_switching(edges, rng);
            if (stats) stats->switches = sw;
            return MultiGraph::from_edge_list(g.num_vertices(), edges);
        }
        if (attempt >= opt.simple_budget) throw InfeasibleError("no simple sample within the attempt budget");
    }
}

/// Random multigraph with minimum degree k+1 and exactly m edges.
inline MultiGraph sample_min_degree_graph(std::uint64_t n, std::uint64_t m, int k, Rng& rng,
                                          const GenerateOptions& opt = {}, GenerateStats* stats = nullptr) {
    if (k < 0) throw std::invalid_argument("k must be non-negative");
    if (2 * m < static_cast<std::uint64_t>(k + 1) * n)
        throw InfeasibleError("2m < (k+1)n: no graph with minimum degree k+1 has m edges");
    return sample_constrained_sequence(DegreeConstraint::all_free(n, k), m, rng, opt, stats);
}

/// Uniform simple graph with n vertices and m edges.
inline MultiGraph gnm(std::uint64_t n, std::uint64_t m, Rng& rng) {
    const std::uint64_t total = n * (n - 1) / 2;
    if (n == 0 ? m > 0 : m > total) throw InfeasibleError("gnm: m exceeds n(n-1)/2");
    const bool complement = m > total / 2;
    const std::uint64_t draws = complement ? total - m : m;
    std::unordered_set<std::uint64_t> chosen;
    chosen.reserve(draws * 2);
    while (chosen.size() < draws) {
        auto u = static_cast<Vertex>(rng.below(n)), v = static_cast<Vertex>(rng.below(n));
        if (u != v) chosen.insert(pair_key(u, v));
    }
    std::vector<VertexPair> pairs;
    if (complement) {
        for (Vertex u = 0; u < n; ++u)
            for (Vertex v = u + 1; v < n; ++v)
                if (!chosen.count(pair_key(u, v))) pairs.emplace_back(u, v);
    } else {
        std::vector<std::uint64_t> keys(chosen.begin(), chosen.end());
        std::sort(keys.begin(), keys.end());
        rng.shuffle(keys);
        for (auto key : keys) pairs.emplace_back(static_cast<Vertex>(key >> 32), static_cast<Vertex>(key & 0xffffffffU));
    }
    return MultiGraph::from_edge_list(n, pairs);
}

struct KCore {
    std::vector<Vertex> vertices;      // original ids, increasing
    MultiGraph graph;                  // induced subgraph on `vertices`, relabelled
    std::vector<std::int64_t> index;   // original id -> new id, or −1
};

/// Queue-based peeling; loops count 2 toward degree.
inline std::vector<Vertex> k_core_vertices(const MultiGraph& g, std::size_t k) {
    const auto n = g.num_vertices();
    std::vector<std::size_t> deg(n);
    std::vector<std::uint8_t> removed(n, 0);
    std::vector<Vertex> queue;
    for (Vertex v = 0; v < n; ++v) {
        deg[v] = g.degree(v);
        if (deg[v] < k) {
            removed[v] = 1;
            queue.push_back(v);
        }
    }
    for (std::size_t head = 0; head < queue.size(); ++head) {
        Vertex v = queue[head];
        g.for_each_incident(v, [&](EdgeRef, Vertex u) {
            if (u == v || removed[u]) return;
            if (--deg[u] < k) {
                removed[u] = 1;
                queue.push_back(u);
            }
        });
    }
    std::vector<Vertex> out;
    for (Vertex v = 0; v < n; ++v)
        if (!removed[v]) out.push_back(v);
    return out;
}

inline KCore induced_subgraph(const MultiGraph& g, std::vector<Vertex> vertices) {
    KCore c;
    c.vertices = std::move(vertices);
    c.index.assign(g.num_vertices(), -1);
    for (std::size_t i = 0; i < c.vertices.size(); ++i) c.index[c.vertices[i]] = static_cast<std::int64_t>(i);
    std::vector<VertexPair> pairs;
    for (auto [u, v] : g.edge_list())
        if (c.index[u] >= 0 && c.index[v] >= 0)
            pairs.emplace_back(static_cast<Vertex>(c.index[u]), static_cast<Vertex>(c.index[v]));
    c.graph = MultiGraph::from_edge_list(c.vertices.size(), pairs);
    return c;
}

inline KCore k_core(const MultiGraph& g, std::size_t k) { return induced_subgraph(g, k_core_vertices(g, k)); }

struct ProcessResult {
    bool exhausted = false;      // every pair was added and no core appeared
    std::uint64_t sigma = 0;     // number of edges at the hitting time
    MultiGraph snapshot;         // F_σ
    KCore core;                  // its (k+1)-core
};

/// Random graph process F_0, F_1, ... stopped at the first non-empty (k+1)-core.
/// The edge order is drawn up front in doubling batches; the hitting index is
/// then located by binary search over prefixes, since the core only grows.
inline ProcessResult process_until_core(std::uint64_t n, int k, Rng& rng) {
    ProcessResult res;
    const std::uint64_t total = n < 2 ? 0 : n * (n - 1) / 2;
    std::vector<VertexPair> order;
    std::unordered_set<std::uint64_t> used;
    auto extend_to = [&](std::uint64_t size) {
        size = std::min(size, total);
        while (order.size() < size) {
            if (used.size() * 2 > total) {
                // Dense tail: draw the rest as a uniform permutation of the remaining pairs.
                std::vector<VertexPair> rest;
                for (Vertex u = 0; u < n; ++u)
                    for (Vertex v = u + 1; v < n; ++v)
                        if (!used.count(pair_key(u, v))) rest.emplace_back(u, v);
                rng.shuffle(rest);
                for (auto& e : rest) {
                    used.insert(pair_key(e.first, e.second));
                    order.push_back(e);
                }
                break;
            }
            auto u = static_cast<Vertex>(rng.below(n)), v = static_cast<Vertex>(rng.below(n));
            if (u == v || !used.insert(pair_key(u, v)).second) continue;
            order.emplace_back(u, v);
        }
    };
    auto core_at = [&](std::uint64_t i) {
        auto g = MultiGraph::from_edge_list(n, std::span<const VertexPair>(order.data(), i));
        return k_core_vertices(g, static_cast<std::size_t>(k + 1));
    };
    std::uint64_t lo = 0, hi = std::max<std::uint64_t>(n, 1);
    for (;;) {
        extend_to(hi);
        hi = std::min<std::uint64_t>(hi, order.size());
        if (!core_at(hi).empty()) break;
        if (hi >= total) {
            res.exhausted = true;
            res.sigma = total;
            res.snapshot = MultiGraph::from_edge_list(n, order);
            return res;
        }
        lo = hi;
        hi *= 2;
    }
    while (hi - lo > 1) {
        std::uint64_t mid = lo + (hi - lo) / 2;
        if (core_at(mid).empty()) lo = mid;
        else hi = mid;
    }
    res.sigma = hi;
    res.snapshot = MultiGraph::from_edge_list(n, std::span<const VertexPair>(order.data(), hi));
    res.core = k_core(res.snapshot, static_cast<std::size_t>(k + 1));
    return res;
}

} // namespace kmatch

#endif
