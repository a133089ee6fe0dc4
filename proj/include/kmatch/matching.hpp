#ifndef KMATCH_MATCHING_HPP
#define KMATCH_MATCHING_HPP

#include <algorithm>
#include <string>
#include <vector>

#include "kmatch/error.hpp"
#include "kmatch/graph.hpp"

namespace kmatch {

/// A k-matching stored as per-vertex partner lists (each of length ≤ k).
class KMatching {
public:
    KMatching() = default;
    KMatching(std::size_t n, int k) : k_(k), partners_(n) {}

    static KMatching from_pairs(std::size_t n, int k, const std::vector<VertexPair>& pairs) {
        KMatching m(n, k);
        for (auto [u, v] : pairs) m.add(u, v);
        return m;
    }

    std::size_t num_vertices() const { return partners_.size(); }
    int k() const { return k_; }
    std::size_t size() const { return size_; }
    std::size_t degree(Vertex v) const { return partners_[v].size(); }
    bool deficient(Vertex v) const { return partners_[v].size() < static_cast<std::size_t>(k_); }
    const std::vector<Vertex>& partners(Vertex v) const { return partners_[v]; }

    bool contains(Vertex u, Vertex v) const {
        const auto& a = partners_[u].size() <= partners_[v].size() ? partners_[u] : partners_[v];
        const Vertex target = partners_[u].size() <= partners_[v].size() ? v : u;
        return std::find(a.begin(), a.end(), target) != a.end();
    }

    void add(Vertex u, Vertex v) {
        if (u == v) throw InvariantError("k-matching: loop " + std::to_string(u));
        if (contains(u, v)) throw InvariantError("k-matching: repeated pair " + std::to_string(u) + " " + std::to_string(v));
        if (!deficient(u) || !deficient(v))
            throw InvariantError("k-matching: degree would exceed k at edge " + std::to_string(u) + " " + std::to_string(v));
        partners_[u].push_back(v);
        partners_[v].push_back(u);
        ++size_;
    }

    void remove(Vertex u, Vertex v) {
        if (!erase_one(partners_[u], v) || !erase_one(partners_[v], u))
            throw InvariantError("k-matching: removing absent pair " + std::to_string(u) + " " + std::to_string(v));
        --size_;
    }

    /// Pairs with u < v, sorted.
    std::vector<VertexPair> edges() const {
        std::vector<VertexPair> out;
        out.reserve(size_);
        for (Vertex u = 0; u < partners_.size(); ++u)
            for (Vertex v : partners_[u])
                if (u < v) out.emplace_back(u, v);
        std::sort(out.begin(), out.end());
        return out;
    }

    /// Σ_v (k − d_M(v)) over vertices not in `skip`.
    std::size_t total_deficiency(const std::vector<std::uint8_t>* skip = nullptr) const {
        std::size_t s = 0;
        for (Vertex v = 0; v < partners_.size(); ++v)
            if (!skip || !(*skip)[v]) s += k_ - partners_[v].size();
        return s;
    }

private:
    static bool erase_one(std::vector<Vertex>& a, Vertex x) {
        auto it = std::find(a.begin(), a.end(), x);
        if (it == a.end()) return false;
        *it = a.back();
        a.pop_back();
        return true;
    }

    int k_ = 0;
    std::vector<std::vector<Vertex>> partners_;
    std::size_t size_ = 0;
};

} // namespace kmatch

#endif
