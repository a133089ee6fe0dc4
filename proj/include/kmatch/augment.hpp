#ifndef KMATCH_AUGMENT_HPP
#define KMATCH_AUGMENT_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kmatch/blossom.hpp"
#include "kmatch/error.hpp"
#include "kmatch/graph.hpp"
#include "kmatch/matching.hpp"
#include "kmatch/rng.hpp"

namespace kmatch {

// ---------------------------------------------------------------- reservation

struct ReservedEdges {
    std::vector<Vertex> v0;            // increasing
    std::vector<std::uint8_t> in_v0;   // indicator of v0
    std::vector<VertexPair> pool;      // E_p
    MultiGraph residual;               // E(G) ∖ E_p
    std::size_t e0 = 0;                // |E_0| before trimming
};

/// Edge reservation: E_0 keeps each edge with probability p; V_0 are the vertices
/// left with fewer than k+1 edges outside E_0; E_p drops E_0 edges touching V_0.
inline ReservedEdges reserve_edges(const MultiGraph& g, int k, double p, Rng& rng) {
    if (!(p >= 0.0 && p <= 1.0)) throw std::invalid_argument("reserve_edges: p must lie in [0, 1]");
    const auto n = g.num_vertices();
    const auto edges = g.edge_list();
    std::vector<std::uint8_t> in_e0(edges.size(), 0);
    std::vector<std::size_t> kept(n, 0);
    ReservedEdges r;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        in_e0[i] = p > 0.0 && rng.uniform() < p;
        r.e0 += in_e0[i];
        if (!in_e0[i]) ++kept[edges[i].first], ++kept[edges[i].second];
    }
    r.in_v0.assign(n, 0);
    for (Vertex v = 0; v < n; ++v)
        if (kept[v] < static_cast<std::size_t>(k + 1)) {
            r.in_v0[v] = 1;
            r.v0.push_back(v);
        }
    std::vector<VertexPair> rest;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        auto [u, v] = edges[i];
        if (in_e0[i] && !r.in_v0[u] && !r.in_v0[v])
            r.pool.push_back(edges[i]);
        else
            rest.push_back(edges[i]);
    }
    r.residual = MultiGraph::from_edge_list(n, rest);
    return r;
}

// ---------------------------------------------------------------- parameters

struct AugmentParams {
    int ell1 = 1, ell2 = 2;
    int ext = 1;              // extension of T_w beyond ℓ_1
    int depth_s = 1;          // levels of T_{v'} forming S_u
    int depth_s_prime = 1;    // levels of T_{v'} forming S'_u
    int depth_sv = 1;         // radius of S_v around u
    std::size_t attempts = 8; // GenerateTree loop budget
    std::size_t iteration_retries = 16;
    std::size_t even_target = 1; // |B_w|
    double discard_cap = 1.0;    // n^{0.25}
    bool check_trees = false;

    /// Logarithmic depths floored at 1; attempts = max(8, n^{0.001}).
    static AugmentParams for_graph(std::size_t n, int k) {
        AugmentParams p;
        const double ln = std::log(std::max<double>(static_cast<double>(n), 2.0));
        const double logk = ln / std::log(std::max(k, 2));
        const double logk1 = ln / std::log(k + 1.0);
        auto floor_at_1 = [](double x) { return std::max(1, static_cast<int>(std::floor(x))); };
        p.ell1 = floor_at_1(0.41 * logk);
        p.ell2 = std::max(p.ell1 + 1, static_cast<int>(std::floor(0.589 * logk)));
        p.ext = floor_at_1(0.05 * logk);
        p.depth_s = floor_at_1(0.1 * logk);
        p.depth_s_prime = floor_at_1(0.02 * logk);
        p.depth_sv = floor_at_1(0.1 * logk1);
        p.attempts = std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(std::pow(double(n), 0.001))));
        // A full tree of height 2ℓ_2 has about 2k^{ℓ_2} even vertices; at desk
        // scale n^{0.5889} is a large share of that, so cap the target at a quarter.
        const double full = 2.0 * std::pow(std::max(k, 2), p.ell2);
        p.even_target = static_cast<std::size_t>(std::max(1.0, std::min(std::pow(double(n), 0.5889), full / 4.0)));
        p.discard_cap = std::pow(double(n), 0.25);
        return p;
    }
};

// ---------------------------------------------------------------- graph of available pairs

/// Distinct non-loop pairs with adjacency lists; grows as pool edges are used.
class PairGraph {
public:
    explicit PairGraph(std::size_t n = 0) : adj_(n) {}

    static PairGraph from_multigraph(const MultiGraph& g) {
        PairGraph a(g.num_vertices());
        for (auto [u, v] : g.edge_list()) a.add(u, v);
        return a;
    }

    bool add(Vertex u, Vertex v) {
        if (u == v || !codes_.insert(pair_key(u, v)).second) return false;
        adj_[u].push_back(v);
        adj_[v].push_back(u);
        return true;
    }

    bool has(Vertex u, Vertex v) const { return codes_.count(pair_key(u, v)) > 0; }
    std::size_t num_vertices() const { return adj_.size(); }
    std::size_t num_pairs() const { return codes_.size(); }
    const std::vector<Vertex>& neighbors(Vertex v) const { return adj_[v]; }

    std::vector<VertexPair> pairs() const {
        std::vector<VertexPair> out;
        for (Vertex u = 0; u < adj_.size(); ++u)
            for (Vertex v : adj_[u])
                if (u < v) out.emplace_back(u, v);
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    std::vector<std::vector<Vertex>> adj_;
    std::unordered_set<std::uint64_t> codes_;
};

// ---------------------------------------------------------------- edge supplies

/// E_w = E'_w ∪ M_t(w): E'_w holds k+1−d_{M_t}(w) random non-M_t pairs at w,
/// drawn lazily once per iteration; M_t(w) is w's matching at iteration start.
/// The live matching may be flipped during the iteration as long as the touched
/// vertices are passed to snapshot() first.
class EdgeSupply {
public:
    EdgeSupply(const PairGraph& a, const KMatching& mt, Rng rng, std::optional<Vertex> exclude = std::nullopt)
        : a_(a), mt_(mt), rng_(rng), exclude_(exclude) {}

    /// E'_w first, then M_t(w).
    const std::vector<Vertex>& options(Vertex w) {
        auto [it, fresh] = cache_.try_emplace(w);
        if (!fresh) return it->second;
        auto& out = it->second;
        const auto& mine = partners_t(w);
        std::vector<Vertex> cand;
        for (Vertex x : a_.neighbors(w))
            if (!excluded(x) && std::find(mine.begin(), mine.end(), x) == mine.end()) cand.push_back(x);
        const std::size_t k1 = static_cast<std::size_t>(mt_.k() + 1);
        const auto want = std::min(cand.size(), k1 - std::min(mine.size(), k1));
        for (std::size_t i = 0; i < want; ++i) {
            std::swap(cand[i], cand[i + rng_.below(cand.size() - i)]);
            out.push_back(cand[i]);
        }
        out.insert(out.end(), mine.begin(), mine.end());
        return out;
    }

    /// Call before the live matching changes at these vertices, so M_t stays recoverable.
    void snapshot(const std::vector<Vertex>& vertices) {
        for (Vertex w : vertices) orig_.try_emplace(w, mt_.partners(w));
    }

    bool excluded(Vertex v) const { return exclude_ && *exclude_ == v; }

private:
    const std::vector<Vertex>& partners_t(Vertex w) const {
        auto it = orig_.find(w);
        return it == orig_.end() ? mt_.partners(w) : it->second;
    }

    const PairGraph& a_;
    const KMatching& mt_; // the live matching; equals M_t away from snapshotted vertices
    Rng rng_;
    std::optional<Vertex> exclude_;
    std::unordered_map<Vertex, std::vector<Vertex>> cache_, orig_;
};

// ---------------------------------------------------------------- alternating trees

struct AlternatingTree {
    struct Node {
        Vertex parent;
        int level;
    };
    Vertex root = 0;
    std::vector<std::vector<Vertex>> levels;
    std::unordered_map<Vertex, Node> nodes;
    std::optional<Vertex> augmenting; // an odd-level vertex that is deficient

    bool contains(Vertex v) const { return nodes.count(v) > 0; }
    int level(Vertex v) const { return nodes.at(v).level; }
    Vertex parent(Vertex v) const { return nodes.at(v).parent; }
    std::size_t size() const { return nodes.size(); }
    int height() const { return static_cast<int>(levels.size()) - 1; }

    /// Vertices root … x.
    std::vector<Vertex> path_to(Vertex x) const {
        std::vector<Vertex> p{x};
        while (x != root) p.push_back(x = parent(x));
        std::reverse(p.begin(), p.end());
        return p;
    }

    /// True if x or one of its ancestors satisfies pred.
    template <class Pred>
    bool below(Vertex x, Pred&& pred) const {
        for (;;) {
            if (pred(x)) return true;
            if (x == root) return false;
            x = parent(x);
        }
    }

    std::vector<Vertex> first_levels(int count) const {
        std::vector<Vertex> out;
        for (int i = 0; i < count && i < static_cast<int>(levels.size()); ++i)
            out.insert(out.end(), levels[i].begin(), levels[i].end());
        return out;
    }

    std::vector<Vertex> even_vertices() const {
        std::vector<Vertex> out;
        for (std::size_t i = 0; i < levels.size(); i += 2) out.insert(out.end(), levels[i].begin(), levels[i].end());
        return out;
    }
};

/// T(root, M, height): L_1 from two non-M choices at the root, even levels
/// through every M-partner, odd levels through one non-M choice per vertex.
/// Growth stops early once a deficient odd-level vertex appears.
inline AlternatingTree grow_tree(Vertex root, const KMatching& m, int height, EdgeSupply& supply) {
    if (!m.deficient(root)) throw InvariantError("grow_tree: root " + std::to_string(root) + " is saturated");
    AlternatingTree t;
    t.root = root;
    t.levels.push_back({root});
    t.nodes.emplace(root, AlternatingTree::Node{root, 0});
    auto attach = [&](Vertex x, Vertex parent, int level) {
        t.nodes.emplace(x, AlternatingTree::Node{parent, level});
        t.levels[level].push_back(x);
        if (level % 2 == 1 && m.deficient(x) && !t.augmenting) t.augmenting = x;
    };
    for (int level = 1; level <= 2 * height; ++level) {
        t.levels.emplace_back();
        for (Vertex y : t.levels[level - 1]) {
            if (level % 2 == 1) {
                int quota = y == root ? 2 : 1;
                for (Vertex x : supply.options(y)) {
                    if (quota == 0) break;
                    if (m.contains(y, x)) continue;
                    --quota;
                    if (!t.contains(x)) attach(x, y, level);
                }
            } else {
                for (Vertex x : m.partners(y))
                    if (!t.contains(x)) attach(x, y, level);
            }
            if (t.augmenting) return t;
        }
        if (t.levels.back().empty()) {
            t.levels.pop_back();
            break;
        }
    }
    return t;
}

/// Edge-class invariant: edges into odd levels avoid M, edges into even levels lie in M.
inline bool check_tree(const AlternatingTree& t, const KMatching& m) {
    std::size_t counted = 0;
    for (std::size_t i = 0; i < t.levels.size(); ++i)
        for (Vertex x : t.levels[i]) {
            ++counted;
            const auto& node = t.nodes.at(x);
            if (node.level != static_cast<int>(i)) return false;
            if (i == 0) {
                if (x != t.root) return false;
                continue;
            }
            if (t.level(node.parent) != static_cast<int>(i) - 1) return false;
            if (m.contains(node.parent, x) != (i % 2 == 0)) return false;
        }
    return counted == t.nodes.size();
}

/// (|L_{2i}|, |L_{2i+1}|) for every i with both levels present.
inline std::vector<std::pair<std::size_t, std::size_t>> level_growth(const AlternatingTree& t) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; 2 * i + 1 < t.levels.size(); ++i) out.emplace_back(t.levels[2 * i].size(), t.levels[2 * i + 1].size());
    return out;
}

/// Checks that `path` is M-alternating from a deficient start to a deficient end,
/// odd length, simple, and made of available pairs (when `a` is given).
inline std::optional<std::string> check_augmenting_path(const KMatching& m, const std::vector<Vertex>& path,
                                                        const PairGraph* a = nullptr) {
    if (path.size() < 2 || path.size() % 2 != 0) return "path must have odd length";
    std::unordered_set<Vertex> seen;
    for (Vertex x : path)
        if (!seen.insert(x).second) return "path repeats vertex " + std::to_string(x);
    if (!m.deficient(path.front()) || !m.deficient(path.back())) return "endpoint is saturated";
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const bool in_m = m.contains(path[i], path[i + 1]);
        if (in_m != (i % 2 == 1)) return "edge " + std::to_string(i) + " breaks alternation";
        if (a && !in_m && !a->has(path[i], path[i + 1])) return "edge " + std::to_string(i) + " is not available";
    }
    return std::nullopt;
}

/// M △ E(P); grows |M| by one.
inline void apply_augmenting_path(KMatching& m, const std::vector<Vertex>& path, const PairGraph* a = nullptr) {
    if (auto err = check_augmenting_path(m, path, a)) throw InvariantError("apply_augmenting_path: " + *err);
    for (std::size_t i = 1; i + 1 < path.size(); i += 2) m.remove(path[i], path[i + 1]);
    for (std::size_t i = 0; i + 1 < path.size(); i += 2) m.add(path[i], path[i + 1]);
}

/// Flip of an even-length alternating path starting with a non-M edge (size unchanged).
inline void flip_even_path(KMatching& m, const std::vector<Vertex>& path) {
    for (std::size_t i = 1; i + 1 < path.size(); i += 2) m.remove(path[i], path[i + 1]);
    for (std::size_t i = 0; i + 1 < path.size(); i += 2) m.add(path[i], path[i + 1]);
}

inline void unflip_even_path(KMatching& m, const std::vector<Vertex>& path) {
    for (std::size_t i = 0; i + 1 < path.size(); i += 2) m.remove(path[i], path[i + 1]);
    for (std::size_t i = 1; i + 1 < path.size(); i += 2) m.add(path[i], path[i + 1]);
}

// ---------------------------------------------------------------- GenerateTree

struct TreeOutcome {
    enum Kind { Augment, Success, Failure } kind = Failure;
    Vertex x = 0;                // w (or w') for Augment, w' for Success
    AlternatingTree tree;        // T_x
    std::vector<Vertex> path;    // augmenting path (Augment) or P_{w,w'} (Success)
    std::vector<Vertex> flipped; // P_{w,w'} when M was turned into M_w, else empty
    std::size_t attempts = 0;
    std::size_t trees_checked = 0, tree_violations = 0;
};

using VertexMarks = std::unordered_set<Vertex>;

/// GenerateTree on a live matching. On Success, and on Augment found in T_{w'},
/// `m` is left as M_w (see `flipped`); on Failure it is restored.
inline TreeOutcome generate_tree(Vertex w, KMatching& m, const std::vector<std::uint8_t>& x_marks,
                                 const VertexMarks& s, const VertexMarks& s_prime, const AugmentParams& params,
                                 EdgeSupply& supply, Rng& rng) {
    TreeOutcome out;
    auto audit = [&](const AlternatingTree& t) {
        if (!params.check_trees) return;
        ++out.trees_checked;
        if (!check_tree(t, m)) ++out.tree_violations;
    };
    for (std::size_t attempt = 1; attempt <= params.attempts; ++attempt) {
        out.attempts = attempt;
        AlternatingTree bar = grow_tree(w, m, params.ell1 + params.ext, supply);
        audit(bar);
        if (bar.augmenting) {
            out.kind = TreeOutcome::Augment;
            out.x = w;
            out.path = bar.path_to(*bar.augmenting);
            out.tree = std::move(bar);
            return out;
        }
        if (bar.height() < 2 * params.ell1 || bar.levels[2 * params.ell1].empty()) break; // same tree every attempt
        const auto& leaves = bar.levels[2 * params.ell1];
        const Vertex wp = leaves[rng.below(leaves.size())];
        auto p = bar.path_to(wp);
        supply.snapshot(p);
        flip_even_path(m, p);
        AlternatingTree t = grow_tree(wp, m, params.ell2, supply);
        audit(t);
        if (t.augmenting) {
            out.kind = TreeOutcome::Augment;
            out.x = wp;
            out.path = t.path_to(*t.augmenting);
            out.flipped = std::move(p);
            out.tree = std::move(t);
            return out;
        }
        std::size_t outside = 0;
        for (Vertex y : t.even_vertices()) outside += !x_marks[y];
        bool ok = outside >= params.even_target;
        for (Vertex y : t.first_levels(params.depth_s))
            if (ok && s.count(y)) ok = false;
        for (Vertex y : p)
            if (ok && s_prime.count(y)) ok = false;
        if (ok) {
            out.kind = TreeOutcome::Success;
            out.x = wp;
            out.path = p;
            out.flipped = std::move(p);
            out.tree = std::move(t);
            return out;
        }
        unflip_even_path(m, p);
    }
    out.kind = TreeOutcome::Failure;
    return out;
}

// ---------------------------------------------------------------- exhaustive fallback

/// Maximum k-matching over `pairs` starting from `m` (blossom search on the copy gadget).
inline std::vector<VertexPair> exhaustive_augment(std::size_t n, int k, const std::vector<VertexPair>& pairs,
                                                  const std::vector<VertexPair>& m,
                                                  std::optional<Vertex> exclude = std::nullopt) {
    std::vector<VertexPair> distinct;
    for (auto [u, v] : pairs)
        if (u != v) distinct.emplace_back(std::min(u, v), std::max(u, v));
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    KMatchingGadget gadget(n, k, distinct, m, exclude);
    gadget.maximize();
    return gadget.matching();
}

inline std::vector<VertexPair> exhaustive_augment(const MultiGraph& g, int k, const std::vector<VertexPair>& m,
                                                  std::optional<Vertex> exclude = std::nullopt) {
    return exhaustive_augment(g.num_vertices(), k, g.edge_list(), m, exclude);
}

// ---------------------------------------------------------------- augmentation loop

struct AugmentStats {
    std::size_t iterations = 0;      // outer iterations (each ends in one augmentation or a stop)
    std::size_t augmentations = 0;
    std::size_t tree_augments = 0;   // augmenting path found inside a tree
    std::size_t pool_connections = 0, graph_connections = 0;
    std::size_t fixups = 0;
    std::size_t generate_calls = 0, generate_failures = 0;
    std::size_t connect_failures = 0;
    std::size_t retries = 0;
    std::size_t fallbacks = 0;       // iterations finished by the blossom search
    std::size_t discarded = 0;       // pool edges dropped as part of some R_t
    std::size_t discard_cap_exceeded = 0;
    std::size_t trees_checked = 0, tree_violations = 0;
    std::size_t pool_initial = 0, pool_final = 0;
    std::size_t v_final = 0;         // |V_t| at the end
    bool perfect = false;
    bool stalled = false;            // no augmenting path exists at all
    std::size_t deficiency = 0;      // Σ (k − d_M) at the end, excluded vertex skipped

    double fallback_rate() const { return iterations ? double(fallbacks) / double(iterations) : 0.0; }
};

struct AugmentResult {
    KMatching matching;
    AugmentStats stats;
};

struct AugmentInput {
    const MultiGraph* residual = nullptr;   // G ∖ E_p
    std::vector<VertexPair> pool;            // E_p
    std::vector<std::uint8_t> in_v0;         // initial V_t
    std::optional<Vertex> exclude;           // z when kn is odd
};

namespace detail {

struct Pool {
    std::vector<VertexPair> edges;
    std::vector<std::uint8_t> alive;
    std::unordered_map<Vertex, std::vector<std::uint32_t>> at;
    std::size_t live = 0;

    explicit Pool(const std::vector<VertexPair>& e) : edges(e), alive(e.size(), 1), live(e.size()) {
        for (std::uint32_t i = 0; i < edges.size(); ++i) {
            at[edges[i].first].push_back(i);
            at[edges[i].second].push_back(i);
        }
    }

    template <class F>
    void for_each_at(Vertex v, F&& f) const {
        auto it = at.find(v);
        if (it == at.end()) return;
        for (auto id : it->second)
            if (alive[id]) f(id, edges[id].first == v ? edges[id].second : edges[id].first);
    }

    void drop(std::uint32_t id) {
        if (alive[id]) {
            alive[id] = 0;
            --live;
        }
    }
};

inline std::vector<Vertex> deficient_vertices(const KMatching& m, std::optional<Vertex> exclude) {
    std::vector<Vertex> out;
    for (Vertex v = 0; v < m.num_vertices(); ++v)
        if (m.deficient(v) && !(exclude && *exclude == v)) out.push_back(v);
    return out;
}

/// Vertices reachable from u in ≤ depth steps along E_{v_i} choices.
inline VertexMarks supply_ball(Vertex u, int depth, EdgeSupply& supply) {
    VertexMarks ball{u};
    std::vector<Vertex> frontier{u};
    for (int d = 0; d < depth; ++d) {
        std::vector<Vertex> next;
        for (Vertex y : frontier)
            for (Vertex x : supply.options(y))
                if (ball.insert(x).second) next.push_back(x);
        frontier.swap(next);
    }
    return ball;
}

} // namespace detail

/// The augmentation loop: two GenerateTree calls per iteration, then a
/// connecting edge between the even levels of T_{v'} and T_{u'}.
inline AugmentResult augment_pool(const AugmentInput& in, KMatching m, const AugmentParams& params, Rng& rng) {
    const auto n = m.num_vertices();
    const int k = m.k();
    const auto exclude = in.exclude;
    AugmentResult res;
    auto& st = res.stats;
    PairGraph a = PairGraph::from_multigraph(*in.residual);
    detail::Pool pool(in.pool);
    st.pool_initial = pool.live;
    std::vector<std::uint8_t> vt = in.in_v0.empty() ? std::vector<std::uint8_t>(n, 0) : in.in_v0;
    std::vector<VertexPair> all_pairs = a.pairs();
    all_pairs.insert(all_pairs.end(), in.pool.begin(), in.pool.end());

    auto absorb_pool_edges = [&](const KMatching& mm) {
        // Pool pairs the blossom search put into M become graph pairs.
        for (auto [u, v] : mm.edges())
            if (!a.has(u, v)) {
                a.add(u, v);
                pool.for_each_at(u, [&](std::uint32_t id, Vertex other) {
                    if (other == v) pool.drop(id);
                });
            }
    };
    auto excluded = [&](Vertex v) { return exclude && *exclude == v; };

    for (std::uint64_t iter = 0;; ++iter) {
        auto def = detail::deficient_vertices(m, exclude);
        if (def.empty()) break;
        if (def.size() == 1) {
            // Single deficient vertex v with d_M(v) ≤ k−2: add {v,u}, drop another M-edge at u.
            const Vertex v = def[0];
            bool fixed = false;
            for (Vertex u : a.neighbors(v)) {
                if (excluded(u) || m.contains(v, u)) continue;
                for (Vertex x : m.partners(u)) {
                    if (x == v) continue;
                    m.remove(u, x);
                    m.add(v, u);
                    fixed = true;
                    break;
                }
                if (fixed) break;
            }
            if (!fixed) {
                st.stalled = true;
                break;
            }
            ++st.fixups;
            continue;
        }
        ++st.iterations;
        bool done = false;
        Rng iter_rng = rng.fork(iter);
        for (std::size_t attempt = 0; attempt <= params.iteration_retries && !done; ++attempt) {
            if (attempt > 0) ++st.retries;
            Rng r = iter_rng.fork(attempt);
            const std::size_t i1 = r.below(def.size());
            std::size_t i2 = r.below(def.size() - 1);
            if (i2 >= i1) ++i2;
            const Vertex v = def[i1], u = def[i2];
            EdgeSupply supply(a, m, r.fork("supply"), exclude);
            Rng tree_rng = r.fork("trees");
            auto finish_augment = [&](const TreeOutcome& o) {
                supply.snapshot(o.path);
                apply_augmenting_path(m, o.path);
                ++st.tree_augments;
                done = true;
            };

            const VertexMarks s_v = detail::supply_ball(u, params.depth_sv, supply);
            ++st.generate_calls;
            TreeOutcome first = generate_tree(v, m, vt, s_v, {}, params, supply, tree_rng);
            st.trees_checked += first.trees_checked;
            st.tree_violations += first.tree_violations;
            if (first.kind == TreeOutcome::Failure) {
                ++st.generate_failures;
                continue;
            }
            if (first.kind == TreeOutcome::Augment) {
                finish_augment(first);
                break;
            }
            if (!m.deficient(u)) { // u lay on P_{v,v'}
                unflip_even_path(m, first.flipped);
                continue;
            }
            VertexMarks s_u, s_u_prime;
            for (Vertex y : first.tree.first_levels(params.depth_s)) s_u.insert(y);
            for (Vertex y : first.tree.first_levels(params.depth_s_prime)) s_u_prime.insert(y);
            ++st.generate_calls;
            TreeOutcome second = generate_tree(u, m, vt, s_u, s_u_prime, params, supply, tree_rng);
            st.trees_checked += second.trees_checked;
            st.tree_violations += second.tree_violations;
            if (second.kind == TreeOutcome::Failure) {
                ++st.generate_failures;
                unflip_even_path(m, first.flipped);
                continue;
            }
            if (second.kind == TreeOutcome::Augment) {
                finish_augment(second);
                break;
            }

            // Connecting step, with m = M_u.
            const AlternatingTree& tv = first.tree;
            const AlternatingTree& tu = second.tree;
            auto pick_b = [&](const AlternatingTree& t) {
                std::vector<Vertex> b;
                for (Vertex y : t.even_vertices()) {
                    if (b.size() >= params.even_target) break;
                    if (!vt[y]) b.push_back(y);
                }
                return b;
            };
            const auto b_v = pick_b(tv), b_u = pick_b(tu);
            VertexMarks a_marks(second.path.begin(), second.path.end());
            for (Vertex y : tu.first_levels(params.depth_s_prime)) a_marks.insert(y);
            std::vector<Vertex> b_v_prime;
            for (Vertex y : b_v)
                if (!tv.below(y, [&](Vertex z) { return a_marks.count(z) > 0; })) b_v_prime.push_back(y);
            const VertexMarks b_u_set(b_u.begin(), b_u.end());

            std::optional<std::vector<Vertex>> found;
            std::optional<std::uint32_t> used_pool;
            for (Vertex v1 : b_v_prime) {
                const auto p1 = tv.path_to(v1);
                const VertexMarks p1_set(p1.begin(), p1.end());
                auto try_edge = [&](Vertex u1) {
                    if (found || !b_u_set.count(u1) || m.contains(v1, u1)) return false;
                    if (tu.below(u1, [&](Vertex z) { return p1_set.count(z) > 0; })) return false;
                    auto path = p1;
                    auto p2 = tu.path_to(u1);
                    path.insert(path.end(), p2.rbegin(), p2.rend());
                    if (check_augmenting_path(m, path)) return false;
                    found = std::move(path);
                    return true;
                };
                pool.for_each_at(v1, [&](std::uint32_t id, Vertex u1) {
                    if (!found && try_edge(u1)) used_pool = id;
                });
                if (found) break;
                for (Vertex u1 : a.neighbors(v1))
                    if (try_edge(u1)) break;
                if (found) break;
            }

            // Y_{t+1} = Y_t ∖ R_t with R_t the pool pairs between B'_{v'} and B_{u'}.
            std::vector<std::uint32_t> rect;
            for (Vertex v1 : b_v_prime)
                pool.for_each_at(v1, [&](std::uint32_t id, Vertex u1) {
                    if (b_u_set.count(u1)) rect.push_back(id);
                });
            std::sort(rect.begin(), rect.end());
            rect.erase(std::unique(rect.begin(), rect.end()), rect.end());
            if (static_cast<double>(rect.size()) > params.discard_cap) ++st.discard_cap_exceeded;
            const std::size_t before = pool.live;
            for (auto id : rect)
                if (!used_pool || id != *used_pool) pool.drop(id);
            st.discarded += before - pool.live;
            KMATCH_CHECK(before - pool.live == rect.size() - (used_pool ? 1 : 0), "pool discard accounting");

            if (!found) {
                ++st.connect_failures;
                unflip_even_path(m, second.flipped);
                unflip_even_path(m, first.flipped);
                continue;
            }
            if (used_pool) {
                auto [x, y] = pool.edges[*used_pool];
                a.add(x, y);
                pool.drop(*used_pool);
                ++st.pool_connections;
            } else {
                ++st.graph_connections;
            }
            apply_augmenting_path(m, *found, &a);
            for (Vertex y : b_v) vt[y] = 1;
            for (Vertex y : b_u) vt[y] = 1;
            done = true;
        }
        if (!done) {
            // Blossom search over every pair of G, one augmentation.
            KMatchingGadget gadget(n, k, [&] {
                auto d = all_pairs;
                for (auto& [x, y] : d)
                    if (x > y) std::swap(x, y);
                std::sort(d.begin(), d.end());
                d.erase(std::unique(d.begin(), d.end()), d.end());
                d.erase(std::remove_if(d.begin(), d.end(), [](auto pr) { return pr.first == pr.second; }), d.end());
                return d;
            }(), m.edges(), exclude);
            if (!gadget.augment_once(static_cast<Vertex>(rng.fork(iter).below(n)))) {
                st.stalled = true;
                break;
            }
            m = KMatching::from_pairs(n, k, gadget.matching());
            absorb_pool_edges(m);
            ++st.fallbacks;
        }
        ++st.augmentations;
    }
    st.pool_final = pool.live;
    st.v_final = static_cast<std::size_t>(std::count(vt.begin(), vt.end(), 1));
    std::vector<std::uint8_t> skip;
    if (exclude) {
        skip.assign(n, 0);
        skip[*exclude] = 1;
    }
    st.deficiency = m.total_deficiency(exclude ? &skip : nullptr);
    st.perfect = st.deficiency == 0 && (!exclude || m.degree(*exclude) == 0);
    res.matching = std::move(m);
    return res;
}

// ---------------------------------------------------------------- odd kn

struct FactorCriticalReport {
    bool ok = false;
    std::string problem;          // why the local structure was rejected
    std::size_t removed = 0;      // M-edges stripped near z
    std::size_t cycle_length = 0; // 0 when the ball is a tree
    std::size_t ball_size = 0;
};

/// d_M(z) = 0 and every vertex within distance 3 of z is saturated.
inline bool factor_critical_predicate(const PairGraph& a, const KMatching& m, Vertex z) {
    if (m.degree(z) != 0) return false;
    std::unordered_map<Vertex, int> dist{{z, 0}};
    std::vector<Vertex> order{z};
    for (std::size_t head = 0; head < order.size(); ++head) {
        const Vertex y = order[head];
        if (dist[y] == 3) continue;
        for (Vertex x : a.neighbors(y))
            if (dist.try_emplace(x, dist[y] + 1).second) order.push_back(x);
    }
    for (Vertex y : order)
        if (y != z && m.deficient(y)) return false;
    return true;
}

/// Clears z and re-saturates the vertices within distance 3 of it outward.
/// An M that already satisfies the predicate at z is returned unchanged.
inline KMatching factor_critical_start(const PairGraph& a, KMatching m, Vertex z, FactorCriticalReport* report = nullptr) {
    FactorCriticalReport rep;
    if (factor_critical_predicate(a, m, z)) {
        rep.ok = true;
        if (report) *report = rep;
        return m;
    }
    std::unordered_map<Vertex, int> dist{{z, 0}};
    std::vector<Vertex> order{z};
    for (std::size_t head = 0; head < order.size(); ++head) {
        const Vertex y = order[head];
        if (dist[y] == 4) continue;
        for (Vertex x : a.neighbors(y))
            if (dist.try_emplace(x, dist[y] + 1).second) order.push_back(x);
    }
    rep.ball_size = order.size();
    for (Vertex y : order)
        for (Vertex x : std::vector<Vertex>(m.partners(y))) {
            m.remove(y, x);
            ++rep.removed;
        }

    // Induced ball subgraph: peel degree-≤1 vertices, what remains must be at most one cycle.
    std::unordered_map<Vertex, int> bdeg;
    std::size_t ball_edges = 0;
    for (Vertex y : order)
        for (Vertex x : a.neighbors(y))
            if (dist.count(x)) {
                ++bdeg[y];
                ball_edges += y < x;
            }
    // The ball is connected, so its cycle rank is |E| − |V| + 1.
    if (ball_edges > order.size()) {
        rep.problem = "ball of radius 4 around z spans more than one cycle";
        if (report) *report = rep;
        return m;
    }
    std::unordered_set<Vertex> on_cycle;
    if (ball_edges == order.size()) {
        std::vector<Vertex> stack;
        std::unordered_set<Vertex> gone;
        for (Vertex y : order)
            if (bdeg[y] <= 1) stack.push_back(y);
        while (!stack.empty()) {
            Vertex y = stack.back();
            stack.pop_back();
            if (!gone.insert(y).second) continue;
            for (Vertex x : a.neighbors(y))
                if (dist.count(x) && !gone.count(x) && --bdeg[x] == 1) stack.push_back(x);
        }
        for (Vertex y : order)
            if (!gone.count(y)) on_cycle.insert(y);
        if (on_cycle.count(z)) {
            rep.problem = "z lies on the cycle of its radius-4 ball";
            if (report) *report = rep;
            return m;
        }
        rep.cycle_length = on_cycle.size();
        if (m.k() < 2) {
            rep.problem = "a cycle in the ball cannot be covered when k = 1";
            if (report) *report = rep;
            return m;
        }
        for (Vertex y : on_cycle)
            for (Vertex x : a.neighbors(y))
                if (y < x && on_cycle.count(x)) m.add(y, x);
    }
    for (Vertex y : order) {
        const int dy = dist[y];
        if (dy == 0 || dy > 3) continue;
        for (Vertex x : a.neighbors(y)) {
            if (!m.deficient(y)) break;
            auto it = dist.find(x);
            if (it == dist.end() || it->second != dy + 1 || on_cycle.count(x) || m.contains(y, x) || !m.deficient(x)) continue;
            m.add(y, x);
        }
        if (m.deficient(y)) {
            rep.problem = "vertex " + std::to_string(y) + " at distance " + std::to_string(dy) +
                          " cannot be saturated outward";
            if (report) *report = rep;
            return m;
        }
    }
    rep.ok = m.degree(z) == 0;
    if (!rep.ok) rep.problem = "z kept matched edges";
    if (report) *report = rep;
    return m;
}

} // namespace kmatch

#endif
