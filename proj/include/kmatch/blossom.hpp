#ifndef KMATCH_BLOSSOM_HPP
#define KMATCH_BLOSSOM_HPP

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "kmatch/error.hpp"
#include "kmatch/graph.hpp"

namespace kmatch {

/// Edmonds' blossom search for one augmenting path at a time. Blossom bases
/// live in a union-find; only vertices touched by a search are reset.
class GeneralMatcher {
public:
    static constexpr int kNone = -1;

    explicit GeneralMatcher(int n) : adj_(n), mate_(n, kNone), label_(n, kUnseen), pred_(n, kNone), base_(n), stamp_(n, 0) {
        std::iota(base_.begin(), base_.end(), 0);
    }

    void add_edge(int u, int v) {
        adj_[u].push_back(v);
        adj_[v].push_back(u);
    }

    void set_mate(int u, int v) {
        mate_[u] = v;
        mate_[v] = u;
    }

    int mate(int v) const { return mate_[v]; }
    int size() const { return static_cast<int>(adj_.size()); }

    /// Augments along one path from the exposed vertex `root`; false if none exists.
    bool augment_from(int root) {
        if (mate_[root] != kNone) return false;
        const int end = search(root);
        if (end != kNone) flip(end);
        for (int v : touched_) {
            label_[v] = kUnseen;
            pred_[v] = kNone;
            base_[v] = v;
        }
        touched_.clear();
        return end != kNone;
    }

    /// Maximum matching from the current one, searching each exposed vertex once.
    std::size_t maximize() {
        for (int v = 0; v < size(); ++v)
            if (mate_[v] == kNone) augment_from(v);
        std::size_t s = 0;
        for (int v = 0; v < size(); ++v)
            if (mate_[v] > v) ++s;
        return s;
    }

private:
    static constexpr std::uint8_t kUnseen = 0, kEven = 1, kOdd = 2;

    int find(int v) {
        while (base_[v] != v) v = base_[v] = base_[base_[v]];
        return v;
    }

    void touch(int v) {
        if (label_[v] == kUnseen && pred_[v] == kNone && base_[v] == v) touched_.push_back(v);
    }

    int lca(int a, int b) {
        ++clock_;
        for (;;) {
            a = find(a);
            stamp_[a] = clock_;
            if (mate_[a] == kNone) break;
            a = pred_[mate_[a]];
        }
        for (;;) {
            b = find(b);
            if (stamp_[b] == clock_) return b;
            b = pred_[mate_[b]];
        }
    }

    void shrink(int v, int b, int child) {
        while (find(v) != b) {
            const int mv = mate_[v];
            touch(v);
            pred_[v] = child;
            child = mv;
            base_[find(v)] = b;
            base_[find(mv)] = b;
            if (label_[mv] == kOdd) {
                label_[mv] = kEven;
                queue_.push_back(mv);
            }
            v = pred_[mv];
        }
    }

    int search(int root) {
        queue_.clear();
        touch(root);
        label_[root] = kEven;
        queue_.push_back(root);
        for (std::size_t head = 0; head < queue_.size(); ++head) {
            const int v = queue_[head];
            for (int to : adj_[v]) {
                if (find(v) == find(to) || mate_[v] == to) continue;
                if (label_[to] == kEven) {
                    const int b = lca(v, to);
                    shrink(v, b, to);
                    shrink(to, b, v);
                } else if (label_[to] == kUnseen) {
                    touch(to);
                    label_[to] = kOdd;
                    pred_[to] = v;
                    if (mate_[to] == kNone) return to;
                    const int w = mate_[to];
                    touch(w);
                    label_[w] = kEven;
                    queue_.push_back(w);
                }
            }
        }
        return kNone;
    }

    void flip(int v) {
        while (v != kNone) {
            const int pv = pred_[v], next = mate_[pv];
            mate_[v] = pv;
            mate_[pv] = v;
            v = next;
        }
    }

    std::vector<std::vector<int>> adj_;
    std::vector<int> mate_;
    std::vector<std::uint8_t> label_;
    std::vector<int> pred_, base_;
    std::vector<std::uint64_t> stamp_;
    std::uint64_t clock_ = 0;
    std::vector<int> queue_, touched_;
};

/// Simple k-matching as ordinary matching: each vertex gets k copies, each pair
/// {u,v} becomes a path copy(u) – e_u – e_v – copy(v). Matching size in the
/// gadget is (#pairs) + |M|, and augmenting paths correspond one to one.
class KMatchingGadget {
public:
    /// `pairs` must be distinct non-loop pairs; `current` a k-matching over them.
    KMatchingGadget(std::size_t n, int k, const std::vector<VertexPair>& pairs, const std::vector<VertexPair>& current,
                    std::optional<Vertex> exclude = std::nullopt)
        : n_(n), k_(k), pairs_(pairs), exclude_(exclude),
          gm_(static_cast<int>(n * static_cast<std::size_t>(k) + 2 * pairs.size())) {
        const int edge0 = static_cast<int>(n * static_cast<std::size_t>(k));
        for (std::size_t j = 0; j < pairs_.size(); ++j) {
            auto [u, v] = pairs_[j];
            const int eu = edge0 + 2 * static_cast<int>(j), ev = eu + 1;
            gm_.add_edge(eu, ev);
            if (excluded(u) || excluded(v)) continue;
            for (int i = 0; i < k_; ++i) {
                gm_.add_edge(copy(u, i), eu);
                gm_.add_edge(copy(v, i), ev);
            }
        }
        std::vector<int> used(n, 0);
        std::vector<std::uint64_t> keys(pairs_.size());
        for (std::size_t j = 0; j < pairs_.size(); ++j) keys[j] = pair_key(pairs_[j].first, pairs_[j].second);
        std::vector<std::size_t> order(pairs_.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return keys[a] < keys[b]; });
        std::vector<std::uint8_t> in_m(pairs_.size(), 0);
        for (auto [u, v] : current) {
            auto it = std::lower_bound(order.begin(), order.end(), pair_key(u, v), [&](std::size_t j, std::uint64_t x) { return keys[j] < x; });
            if (it == order.end() || keys[*it] != pair_key(u, v)) throw InvariantError("gadget: matching pair missing from the pair list");
            if (in_m[*it]) throw InvariantError("gadget: matching pair repeated");
            if (excluded(u) || excluded(v)) throw InvariantError("gadget: matching touches the excluded vertex");
            in_m[*it] = 1;
        }
        for (std::size_t j = 0; j < pairs_.size(); ++j) {
            const int eu = edge0 + 2 * static_cast<int>(j), ev = eu + 1;
            if (!in_m[j]) {
                gm_.set_mate(eu, ev);
                continue;
            }
            auto [u, v] = pairs_[j];
            if (used[u] >= k_ || used[v] >= k_) throw InvariantError("gadget: matching exceeds degree k");
            gm_.set_mate(copy(u, used[u]++), eu);
            gm_.set_mate(copy(v, used[v]++), ev);
        }
    }

    /// One augmentation rooted at a free copy of a deficient vertex, trying vertices in order from `start`.
    bool augment_once(Vertex start = 0) {
        for (std::size_t s = 0; s < n_; ++s) {
            const auto v = static_cast<Vertex>((start + s) % n_);
            if (excluded(v) || dead(v)) continue;
            if (auto c = free_copy(v)) {
                if (gm_.augment_from(*c)) return true;
                mark_dead(v);
            }
        }
        return false;
    }

    /// Augments until no augmenting path remains.
    void maximize() {
        for (Vertex v = 0; v < n_; ++v) {
            if (excluded(v)) continue;
            while (auto c = free_copy(v)) {
                if (!gm_.augment_from(*c)) break;
            }
        }
    }

    std::vector<VertexPair> matching() const {
        const int edge0 = static_cast<int>(n_ * static_cast<std::size_t>(k_));
        std::vector<VertexPair> out;
        for (std::size_t j = 0; j < pairs_.size(); ++j) {
            const int eu = edge0 + 2 * static_cast<int>(j);
            if (gm_.mate(eu) != eu + 1) out.push_back(pairs_[j]);
        }
        return out;
    }

private:
    int copy(Vertex v, int i) const { return static_cast<int>(v) * k_ + i; }
    bool excluded(Vertex v) const { return exclude_ && *exclude_ == v; }

    std::optional<int> free_copy(Vertex v) const {
        for (int i = 0; i < k_; ++i)
            if (gm_.mate(copy(v, i)) == GeneralMatcher::kNone) return copy(v, i);
        return std::nullopt;
    }

    // A root with no augmenting path keeps none after later augmentations.
    bool dead(Vertex v) const { return dead_.size() > v && dead_[v]; }
    void mark_dead(Vertex v) {
        if (dead_.size() < n_) dead_.resize(n_, 0);
        dead_[v] = 1;
    }

    std::size_t n_;
    int k_;
    std::vector<VertexPair> pairs_;
    std::optional<Vertex> exclude_;
    GeneralMatcher gm_;
    std::vector<std::uint8_t> dead_;
};

} // namespace kmatch

#endif
