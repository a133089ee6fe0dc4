#ifndef KMATCH_GRAPH_HPP
#define KMATCH_GRAPH_HPP

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kmatch/error.hpp"
#include "kmatch/rng.hpp"

namespace kmatch {

using Vertex = std::uint32_t;
using VertexPair = std::pair<Vertex, Vertex>;

/// Order-free 64-bit key of the pair {u, v}.
inline std::uint64_t pair_key(Vertex u, Vertex v) {
    if (u > v) std::swap(u, v);
    return (std::uint64_t(u) << 32) | v;
}

/// Handle to one edge of a MultiGraph. Ids are never reused.
struct EdgeRef {
    std::uint32_t id = 0;
    friend bool operator==(EdgeRef, EdgeRef) = default;
};

/// Multigraph with loops and parallel edges.
///
/// Each edge owns two half-edges (2*id and 2*id+1). Every vertex keeps an
/// array of the half-edges it owns and each half-edge remembers its slot, so
/// deletion is a swap with the last slot. A loop puts both of its half-edges
/// in the same array and therefore counts 2 toward degree and sampling weight.
class MultiGraph {
public:
    explicit MultiGraph(std::size_t n = 0) : incidence_(n) {}

    static MultiGraph from_edge_list(std::size_t n, std::span<const VertexPair> pairs) {
        MultiGraph g(n);
        g.ends_.reserve(2 * pairs.size());
        g.slot_.reserve(2 * pairs.size());
        for (auto [u, v] : pairs) g.add_edge(u, v);
        return g;
    }

    std::size_t num_vertices() const { return incidence_.size(); }
    std::size_t num_edges() const { return live_edges_; }
    /// Number of edge ids ever issued, live or deleted.
    std::size_t edge_capacity() const { return ends_.size() / 2; }

    std::size_t degree(Vertex v) const { return incidence_[v].size(); }

    std::size_t max_degree() const {
        std::size_t d = 0;
        for (const auto& inc : incidence_) d = std::max(d, inc.size());
        return d;
    }

    EdgeRef add_edge(Vertex u, Vertex v) {
        if (u >= num_vertices() || v >= num_vertices())
            throw std::out_of_range("vertex index out of range: " + std::to_string(std::max(u, v)));
        auto id = static_cast<std::uint32_t>(ends_.size() / 2);
        ends_.push_back(u);
        ends_.push_back(v);
        slot_.push_back(static_cast<std::uint32_t>(incidence_[u].size()));
        incidence_[u].push_back(2 * id);
        slot_.push_back(static_cast<std::uint32_t>(incidence_[v].size()));
        incidence_[v].push_back(2 * id + 1);
        alive_.push_back(1);
        ++live_edges_;
        return EdgeRef{id};
    }

    bool alive(EdgeRef e) const { return e.id < alive_.size() && alive_[e.id]; }

    VertexPair endpoints(EdgeRef e) const { return {ends_[2 * e.id], ends_[2 * e.id + 1]}; }

    Vertex other(EdgeRef e, Vertex v) const {
        auto [a, b] = endpoints(e);
        return a == v ? b : a;
    }

    /// Uniform half-edge at v; returns its edge and the far endpoint.
    std::pair<EdgeRef, Vertex> random_incident(Vertex v, Rng& rng) const {
        const auto& inc = incidence_[v];
        if (inc.empty()) throw std::invalid_argument("random_incident_edge: vertex has degree 0");
        ++touches_;
        std::uint32_t h = inc[rng.below(inc.size())];
        return {EdgeRef{h / 2}, ends_[h ^ 1U]};
    }

    EdgeRef random_incident_edge(Vertex v, Rng& rng) const { return random_incident(v, rng).first; }

    /// The most recently placed half-edge at v (deterministic, O(1)).
    std::pair<EdgeRef, Vertex> last_incident(Vertex v) const {
        std::uint32_t h = incidence_[v].back();
        return {EdgeRef{h / 2}, ends_[h ^ 1U]};
    }

    void delete_edge(EdgeRef e) {
        if (!alive(e)) throw std::invalid_argument("delete_edge: stale edge " + std::to_string(e.id));
        unlink(2 * e.id);
        unlink(2 * e.id + 1);
        alive_[e.id] = 0;
        --live_edges_;
    }

    std::vector<EdgeRef> delete_all_incident(Vertex v) {
        std::vector<EdgeRef> removed;
        while (!incidence_[v].empty()) {
            EdgeRef e{incidence_[v].back() / 2};
            delete_edge(e);
            removed.push_back(e);
        }
        return removed;
    }

    /// Calls f(edge, far endpoint) once per half-edge at v (a loop is visited twice).
    template <class F>
    void for_each_incident(Vertex v, F&& f) const {
        for (std::uint32_t h : incidence_[v]) f(EdgeRef{h / 2}, ends_[h ^ 1U]);
    }

    /// Live edges in id order.
    std::vector<VertexPair> edge_list() const {
        std::vector<VertexPair> out;
        out.reserve(live_edges_);
        for (std::uint32_t id = 0; id < alive_.size(); ++id)
            if (alive_[id]) out.emplace_back(ends_[2 * id], ends_[2 * id + 1]);
        return out;
    }

    std::vector<EdgeRef> live_edges() const {
        std::vector<EdgeRef> out;
        out.reserve(live_edges_);
        for (std::uint32_t id = 0; id < alive_.size(); ++id)
            if (alive_[id]) out.push_back(EdgeRef{id});
        return out;
    }

    /// Half-edges removed plus half-edges sampled since construction.
    std::uint64_t half_edge_touches() const { return touches_; }

    /// Recomputes degrees from the live edge list and cross-checks every slot.
    bool check_invariants() const {
        std::vector<std::size_t> deg(num_vertices(), 0);
        std::size_t live = 0;
        for (std::uint32_t id = 0; id < alive_.size(); ++id) {
            if (!alive_[id]) continue;
            ++live;
            ++deg[ends_[2 * id]];
            ++deg[ends_[2 * id + 1]];
            for (std::uint32_t h : {2 * id, 2 * id + 1}) {
                const auto& inc = incidence_[ends_[h]];
                if (slot_[h] >= inc.size() || inc[slot_[h]] != h) return false;
            }
        }
        if (live != live_edges_) return false;
        std::size_t total = 0;
        for (Vertex v = 0; v < num_vertices(); ++v) {
            if (deg[v] != incidence_[v].size()) return false;
            total += deg[v];
        }
        return total == 2 * live_edges_;
    }

private:
    void unlink(std::uint32_t h) {
        auto& inc = incidence_[ends_[h]];
        std::uint32_t s = slot_[h];
        std::uint32_t last = inc.back();
        inc[s] = last;
        slot_[last] = s;
        inc.pop_back();
        ++touches_;
    }

    std::vector<std::vector<std::uint32_t>> incidence_;
    std::vector<Vertex> ends_;         // ends_[h] owns half-edge h
    std::vector<std::uint32_t> slot_;  // position of h in its owner's array
    std::vector<std::uint8_t> alive_;
    std::size_t live_edges_ = 0;
    mutable std::uint64_t touches_ = 0;
};

} // namespace kmatch

#endif
