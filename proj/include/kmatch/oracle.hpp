#ifndef KMATCH_ORACLE_HPP
#define KMATCH_ORACLE_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "kmatch/graph.hpp"

namespace kmatch {

struct OracleResult {
    std::size_t size = 0;
    std::vector<VertexPair> witness;
    std::uint64_t enumerated = 0; // search nodes visited
};

/// Distinct non-loop pairs of g, u < v, sorted. A k-matching uses each pair at most once.
inline std::vector<VertexPair> distinct_pairs(const MultiGraph& g) {
    std::vector<VertexPair> out;
    for (auto [u, v] : g.edge_list())
        if (u != v) out.emplace_back(std::min(u, v), std::max(u, v));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

/// Exact maximum k-matching by include/exclude search over the distinct pairs.
inline OracleResult brute_force_max_k_matching(const MultiGraph& g, int k, std::size_t max_pairs = 24) {
    const auto pairs = distinct_pairs(g);
    if (pairs.size() > max_pairs)
        throw std::invalid_argument("brute_force_max_k_matching: " + std::to_string(pairs.size()) +
                                    " distinct pairs exceed the limit of " + std::to_string(max_pairs));
    OracleResult best;
    if (k <= 0) return best;
    std::vector<int> deg(g.num_vertices(), 0);
    std::vector<VertexPair> chosen;

    auto dfs = [&](auto&& self, std::size_t i) -> void {
        ++best.enumerated;
        if (chosen.size() > best.size) {
            best.size = chosen.size();
            best.witness = chosen;
        }
        if (i == pairs.size() || chosen.size() + (pairs.size() - i) <= best.size) return;
        auto [u, v] = pairs[i];
        if (deg[u] < k && deg[v] < k) {
            ++deg[u], ++deg[v];
            chosen.push_back(pairs[i]);
            self(self, i + 1);
            chosen.pop_back();
            --deg[u], --deg[v];
        }
        self(self, i + 1);
    };
    dfs(dfs, 0);
    return best;
}

struct VerifyResult {
    bool ok = true;
    std::string message;
    std::optional<VertexPair> offending;
    std::optional<Vertex> offending_vertex;

    explicit operator bool() const { return ok; }
};

/// M must use distinct non-loop pairs of g ∪ pool with every degree at most k.
inline VerifyResult verify_k_matching(const MultiGraph& g, const std::vector<VertexPair>& pool,
                                      const std::vector<VertexPair>& m, int k) {
    std::unordered_set<std::uint64_t> available;
    for (auto [u, v] : g.edge_list()) available.insert(pair_key(u, v));
    for (auto [u, v] : pool) available.insert(pair_key(u, v));
    std::unordered_set<std::uint64_t> used;
    std::vector<int> deg(g.num_vertices(), 0);
    for (auto [u, v] : m) {
        if (u >= g.num_vertices() || v >= g.num_vertices()) return {false, "vertex out of range", VertexPair{u, v}, {}};
        if (u == v) return {false, "loop in matching", VertexPair{u, v}, {}};
        if (!available.count(pair_key(u, v))) return {false, "edge not in graph or pool", VertexPair{u, v}, {}};
        if (!used.insert(pair_key(u, v)).second) return {false, "pair used twice", VertexPair{u, v}, {}};
        if (++deg[u] > k) return {false, "degree exceeds k", VertexPair{u, v}, u};
        if (++deg[v] > k) return {false, "degree exceeds k", VertexPair{u, v}, v};
    }
    return {};
}

/// Additionally d_M = k everywhere, except `exclude`, which must have d_M = 0.
inline VerifyResult verify_k_factor(const MultiGraph& g, const std::vector<VertexPair>& pool,
                                    const std::vector<VertexPair>& m, int k,
                                    std::optional<Vertex> exclude = std::nullopt) {
    if (auto r = verify_k_matching(g, pool, m, k); !r) return r;
    std::vector<int> deg(g.num_vertices(), 0);
    for (auto [u, v] : m) ++deg[u], ++deg[v];
    for (Vertex v = 0; v < g.num_vertices(); ++v) {
        const int want = exclude && *exclude == v ? 0 : k;
        if (deg[v] != want)
            return {false, "vertex " + std::to_string(v) + " has matched degree " + std::to_string(deg[v]) +
                               ", expected " + std::to_string(want),
                    {}, v};
    }
    return {};
}

/// Repeated deletion of any vertex with degree < k until none is left. O(n·m).
inline std::vector<Vertex> naive_k_core(const MultiGraph& g, std::size_t k) {
    const auto n = g.num_vertices();
    const auto edges = g.edge_list();
    std::vector<std::uint8_t> alive(n, 1);
    for (bool changed = true; changed;) {
        changed = false;
        std::vector<std::size_t> deg(n, 0);
        for (auto [u, v] : edges)
            if (alive[u] && alive[v]) ++deg[u], ++deg[v];
        for (Vertex v = 0; v < n; ++v)
            if (alive[v] && deg[v] < k) {
                alive[v] = 0;
                changed = true;
                break;
            }
    }
    std::vector<Vertex> out;
    for (Vertex v = 0; v < n; ++v)
        if (alive[v]) out.push_back(v);
    return out;
}

} // namespace kmatch

#endif
