#pragma once

#include <functional>
#include <numeric>
#include <queue>
#include <set>
#include <vector>

#include "pulse/graph.hpp"

namespace pulse::oracle {

// Dijkstra with the engine's saturating arithmetic; unreachable stays INF.
inline std::vector<Value> dijkstra(const GlobalGraph& g, VertexId source) {
  std::vector<Value> dist(g.n, kInf);
  if (g.n == 0) return dist;
  using Item = std::pair<Value, VertexId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[source] = 0;
  pq.emplace(0, source);
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d != dist[u]) continue;
    auto adj = g.neighbors(u);
    auto w = g.edge_weights(u);
    for (std::size_t i = 0; i < adj.size(); ++i) {
      Value nd = saturating_add(d, w[i]);
      if (nd < dist[adj[i]]) {
        dist[adj[i]] = nd;
        pq.emplace(nd, adj[i]);
      }
    }
  }
  return dist;
}

class UnionFind {
 public:
  explicit UnionFind(VertexId n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), VertexId{0}); }
  VertexId find(VertexId x) {
    while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
    return x;
  }
  void unite(VertexId a, VertexId b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<VertexId> parent_;
};

// Component count, ignoring edge direction.
inline std::size_t component_count(const GlobalGraph& g) {
  UnionFind uf(g.n);
  for (VertexId u = 0; u < g.n; ++u)
    for (VertexId v : g.neighbors(u)) uf.unite(u, v);
  std::size_t count = 0;
  for (VertexId u = 0; u < g.n; ++u) count += uf.find(u) == u;
  return count;
}

// Smallest vertex id in each vertex's component.
inline std::vector<Value> component_min_labels(const GlobalGraph& g) {
  UnionFind uf(g.n);
  for (VertexId u = 0; u < g.n; ++u)
    for (VertexId v : g.neighbors(u)) uf.unite(u, v);
  std::vector<Value> out(g.n);
  for (VertexId u = 0; u < g.n; ++u) out[u] = static_cast<Value>(uf.find(u));
  return out;
}

inline std::size_t distinct_labels(const std::vector<Value>& labels) {
  return std::set<Value>(labels.begin(), labels.end()).size();
}

inline std::vector<Value> in_degree(const GlobalGraph& g) {
  std::vector<Value> deg(g.n, 0);
  for (VertexId v : g.targets) ++deg[v];
  return deg;
}

}  // namespace pulse::oracle
