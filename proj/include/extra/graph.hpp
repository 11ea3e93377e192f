#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <set>
#include <utility>
#include <vector>

#include "extra/error.hpp"
#include "extra/linalg.hpp"
#include "extra/rng.hpp"

namespace extra::graph {

using std::size_t;

/// Undirected simple graph over agents 0..n-1. Immutable after construction;
/// neighbor lists are kept sorted ascending.
class Graph {
public:
    Graph(size_t n, std::vector<std::pair<size_t, size_t>> edges) : n_(n), adjacency_(n) {
        if (n < 1) throw Error("graph needs at least one agent");
        std::set<std::pair<size_t, size_t>> seen;
        edges_.reserve(edges.size());
        for (auto [i, j] : edges) {
            if (i == j) throw Error("self-loops are not allowed");
            if (i >= n || j >= n) throw Error("edge endpoint out of range");
            if (i > j) std::swap(i, j);
            if (!seen.insert({i, j}).second) throw Error("duplicate edge");
        }
        for (const auto& e : seen) {
            edges_.push_back(e);
            adjacency_[e.first].push_back(e.second);
            adjacency_[e.second].push_back(e.first);
        }
        for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
    }

    size_t agent_count() const { return n_; }
    size_t edge_count() const { return edges_.size(); }
    const std::vector<std::pair<size_t, size_t>>& edges() const { return edges_; }
    const std::vector<size_t>& neighbors(size_t i) const { return adjacency_[i]; }
    size_t degree(size_t i) const { return adjacency_[i].size(); }

    size_t max_degree() const {
        size_t d = 0;
        for (size_t i = 0; i < n_; ++i) d = std::max(d, degree(i));
        return d;
    }

    bool has_edge(size_t i, size_t j) const {
        if (i == j) return false;
        const auto& nbrs = adjacency_[i];
        return std::binary_search(nbrs.begin(), nbrs.end(), j);
    }

private:
    size_t n_;
    std::vector<std::pair<size_t, size_t>> edges_;
    std::vector<std::vector<size_t>> adjacency_;
};

/// Breadth-first reachability from agent 0.
inline bool is_connected(const Graph& g) {
    const size_t n = g.agent_count();
    std::vector<bool> visited(n, false);
    std::vector<size_t> queue{0};
    visited[0] = true;
    size_t reached = 1;
    while (!queue.empty()) {
        const size_t u = queue.back();
        queue.pop_back();
        for (size_t v : g.neighbors(u)) {
            if (!visited[v]) {
                visited[v] = true;
                ++reached;
                queue.push_back(v);
            }
        }
    }
    return reached == n;
}

/// Edge budget implied by a connectivity ratio: round-half-up of
/// r * n(n-1)/2.
inline size_t edge_budget(size_t n, double r) {
    return static_cast<size_t>(std::floor(r * (static_cast<double>(n) * (n - 1) / 2.0) + 0.5));
}

/// Random connected graph with exactly edge_budget(n, r) edges, a pure
/// function of (n, r, seed). A uniform spanning tree is grown by random
/// walk first, then the remaining budget is filled with a deterministic
/// shuffle of the non-tree pairs.
inline Graph random_connected(size_t n, double r, std::uint64_t seed) {
    if (n < 2) throw Error("random_connected: need at least two agents");
    if (!(r > 0.0) || r > 1.0) throw Error("random_connected: ratio must be in (0, 1]");
    const size_t m = edge_budget(n, r);
    if (m < n - 1) throw Error("ratio too small for connectivity");

    rng::Xorshift64Star gen(seed);
    std::set<std::pair<size_t, size_t>> edges;

    // Random-walk spanning tree (Aldous-Broder over the complete graph).
    std::vector<bool> visited(n, false);
    size_t current = static_cast<size_t>(gen.next_below(n));
    visited[current] = true;
    size_t reached = 1;
    while (reached < n) {
        size_t next = static_cast<size_t>(gen.next_below(n - 1));
        if (next >= current) ++next;
        if (!visited[next]) {
            visited[next] = true;
            ++reached;
            edges.insert({std::min(current, next), std::max(current, next)});
        }
        current = next;
    }

    if (m > edges.size()) {
        std::vector<std::pair<size_t, size_t>> free_pairs;
        free_pairs.reserve(n * (n - 1) / 2 - edges.size());
        for (size_t i = 0; i + 1 < n; ++i)
            for (size_t j = i + 1; j < n; ++j)
                if (!edges.count({i, j})) free_pairs.push_back({i, j});
        gen.shuffle(free_pairs);
        for (size_t k = 0; k < m - (n - 1); ++k) edges.insert(free_pairs[k]);
    }

    return Graph(n, {edges.begin(), edges.end()});
}

/// Graph Laplacian L = D - A.
inline linalg::SymMatrix laplacian(const Graph& g) {
    linalg::SymMatrix l(g.agent_count());
    for (size_t i = 0; i < g.agent_count(); ++i)
        l.set(i, i, static_cast<double>(g.degree(i)));
    for (auto [i, j] : g.edges()) l.set(i, j, -1.0);
    return l;
}

/// Edge-list text format: first line "n m", then one "i j" line per edge.
inline void write_edge_list(std::ostream& out, const Graph& g) {
    out << g.agent_count() << ' ' << g.edge_count() << '\n';
    for (auto [i, j] : g.edges()) out << i << ' ' << j << '\n';
}

inline Graph read_edge_list(std::istream& in) {
    size_t n = 0, m = 0;
    if (!(in >> n >> m)) throw Error("edge list: malformed header");
    std::vector<std::pair<size_t, size_t>> edges(m);
    for (auto& [i, j] : edges) {
        if (!(in >> i >> j)) throw Error("edge list: truncated");
    }
    return Graph(n, std::move(edges));
}

}  // namespace extra::graph
