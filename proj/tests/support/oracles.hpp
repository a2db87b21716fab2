#pragma once

// Test-side oracles. They share nothing with the library beyond the graph
// container, so a bug in the engine's own helpers cannot hide here.

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <vector>

#include "pulse/graph.hpp"

namespace testsupport {

using pulse::GlobalGraph;
using pulse::Value;
using pulse::VertexId;

inline constexpr Value kInf = std::numeric_limits<Value>::max();

inline Value sat_add(Value a, Value b) {
  if (a == kInf || b == kInf) return kInf;
  std::int64_t s = std::int64_t{a} + b;
  if (s >= kInf) return kInf;
  if (s < std::numeric_limits<Value>::min()) return std::numeric_limits<Value>::min();
  return static_cast<Value>(s);
}

// O(n^2) Dijkstra over a dense scan; no heap.
inline std::vector<Value> shortest_paths(const GlobalGraph& g, VertexId source) {
  std::vector<Value> dist(g.n, kInf);
  std::vector<char> done(g.n, 0);
  if (g.n == 0) return dist;
  dist[source] = 0;
  for (VertexId iter = 0; iter < g.n; ++iter) {
    VertexId u = g.n;
    for (VertexId v = 0; v < g.n; ++v)
      if (!done[v] && dist[v] != kInf && (u == g.n || dist[v] < dist[u])) u = v;
    if (u == g.n) break;
    done[u] = 1;
    for (auto e = g.offsets[u]; e < g.offsets[u + 1]; ++e) {
      Value nd = sat_add(dist[u], g.weights[e]);
      if (nd < dist[g.targets[e]]) dist[g.targets[e]] = nd;
    }
  }
  return dist;
}

// Weak components by union-find with union by size.
class DisjointSets {
 public:
  explicit DisjointSets(VertexId n) : parent_(n), size_(n, 1) {
    for (VertexId i = 0; i < n; ++i) parent_[i] = i;
  }
  VertexId root(VertexId x) {
    VertexId r = x;
    while (parent_[r] != r) r = parent_[r];
    while (parent_[x] != r) {
      VertexId next = parent_[x];
      parent_[x] = r;
      x = next;
    }
    return r;
  }
  bool join(VertexId a, VertexId b) {
    a = root(a);
    b = root(b);
    if (a == b) return false;
    if (size_[a] < size_[b]) std::swap(a, b);
    parent_[b] = a;
    size_[a] += size_[b];
    return true;
  }

 private:
  std::vector<VertexId> parent_;
  std::vector<VertexId> size_;
};

inline std::size_t count_components(const GlobalGraph& g) {
  DisjointSets ds(g.n);
  std::size_t comps = g.n;
  for (VertexId u = 0; u < g.n; ++u)
    for (auto e = g.offsets[u]; e < g.offsets[u + 1]; ++e) comps -= ds.join(u, g.targets[e]);
  return comps;
}

// Minimum vertex id per weak component, by BFS over both edge directions.
inline std::vector<Value> min_label_bfs(const GlobalGraph& g) {
  std::vector<std::vector<VertexId>> und(g.n);
  for (VertexId u = 0; u < g.n; ++u)
    for (auto e = g.offsets[u]; e < g.offsets[u + 1]; ++e) {
      und[u].push_back(g.targets[e]);
      und[g.targets[e]].push_back(u);
    }
  std::vector<Value> label(g.n, -1);
  for (VertexId s = 0; s < g.n; ++s) {
    if (label[s] != -1) continue;
    std::deque<VertexId> q{s};
    label[s] = static_cast<Value>(s);
    while (!q.empty()) {
      VertexId u = q.front();
      q.pop_front();
      for (VertexId v : und[u])
        if (label[v] == -1) {
          label[v] = static_cast<Value>(s);
          q.push_back(v);
        }
    }
  }
  return label;
}

inline std::vector<Value> count_in_edges(const GlobalGraph& g) {
  std::vector<Value> deg(g.n, 0);
  for (VertexId u = 0; u < g.n; ++u)
    for (auto e = g.offsets[u]; e < g.offsets[u + 1]; ++e) ++deg[g.targets[e]];
  return deg;
}

inline std::vector<Value> weighted_in(const GlobalGraph& g) {
  std::vector<Value> w(g.n, 0);
  for (VertexId u = 0; u < g.n; ++u)
    for (auto e = g.offsets[u]; e < g.offsets[u + 1]; ++e)
      w[g.targets[e]] = sat_add(w[g.targets[e]], g.weights[e]);
  return w;
}

enum class FoldOp { Min, Max, Sum };

inline Value fold_one(FoldOp op, Value acc, Value x) {
  switch (op) {
    case FoldOp::Min: return std::min(acc, x);
    case FoldOp::Max: return std::max(acc, x);
    case FoldOp::Sum: return sat_add(acc, x);
  }
  return acc;
}

}  // namespace testsupport
