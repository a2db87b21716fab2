#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pulse/types.hpp"

namespace pulse {

struct WeightedEdge {
  VertexId src;
  VertexId dst;
  Value weight;
};

// Global CSR over out-edges. Per-vertex edge order is the input order.
struct GlobalGraph {
  VertexId n = 0;
  std::vector<EdgeIndex> offsets{0};
  std::vector<VertexId> targets;
  std::vector<Value> weights;

  EdgeIndex m() const { return targets.size(); }

  EdgeIndex degree(VertexId v) const { return offsets[v + 1] - offsets[v]; }

  std::span<const VertexId> neighbors(VertexId v) const {
    return {targets.data() + offsets[v], static_cast<std::size_t>(degree(v))};
  }
  std::span<const Value> edge_weights(VertexId v) const {
    return {weights.data() + offsets[v], static_cast<std::size_t>(degree(v))};
  }

  // Throws BoundsError on a malformed CSR.
  void validate() const {
    if (offsets.size() != static_cast<std::size_t>(n) + 1)
      throw BoundsError("csr: offsets length " + std::to_string(offsets.size()) +
                        " != n+1 = " + std::to_string(std::uint64_t{n} + 1));
    if (offsets.front() != 0) throw BoundsError("csr: offsets[0] != 0");
    for (std::size_t i = 1; i < offsets.size(); ++i)
      if (offsets[i] < offsets[i - 1])
        throw BoundsError("csr: offsets decrease at " + std::to_string(i));
    if (offsets.back() != targets.size())
      throw BoundsError("csr: offsets[n] != m");
    if (weights.size() != targets.size())
      throw BoundsError("csr: weights length != m");
    for (auto t : targets)
      if (t >= n) throw BoundsError("csr: target " + std::to_string(t) + " out of range");
    for (auto w : weights)
      if (w < 0) throw BoundsError("csr: negative weight");
  }

  std::vector<WeightedEdge> edges() const {
    std::vector<WeightedEdge> out;
    out.reserve(targets.size());
    for (VertexId v = 0; v < n; ++v)
      for (EdgeIndex i = offsets[v]; i < offsets[v + 1]; ++i)
        out.push_back({v, targets[i], weights[i]});
    return out;
  }

  friend bool operator==(const GlobalGraph&, const GlobalGraph&) = default;
};

namespace detail {

// Stable counting sort by source keeps per-vertex input order.
inline GlobalGraph build_csr(VertexId n, const std::vector<WeightedEdge>& edges) {
  GlobalGraph g;
  g.n = n;
  g.offsets.assign(std::size_t{n} + 1, 0);
  for (const auto& e : edges) ++g.offsets[e.src + 1];
  std::partial_sum(g.offsets.begin(), g.offsets.end(), g.offsets.begin());
  g.targets.resize(edges.size());
  g.weights.resize(edges.size());
  std::vector<EdgeIndex> cursor(g.offsets.begin(), g.offsets.end() - 1);
  for (const auto& e : edges) {
    auto slot = cursor[e.src]++;
    g.targets[slot] = e.dst;
    g.weights[slot] = e.weight;
  }
  return g;
}

inline std::uint64_t pair_key(VertexId u, VertexId v) {
  return (std::uint64_t{u} << 32) | v;
}

}  // namespace detail

// Builds a CSR from an edge list. With symmetrize, every edge gains its
// reverse and duplicate (src, dst) pairs collapse to their first occurrence.
inline GlobalGraph from_edges(VertexId n, std::vector<WeightedEdge> edges,
                              bool symmetrize = false) {
  for (const auto& e : edges)
    if (e.src >= n || e.dst >= n)
      throw BoundsError("edge (" + std::to_string(e.src) + "," + std::to_string(e.dst) +
                        ") outside n=" + std::to_string(n));
  if (symmetrize) {
    std::vector<WeightedEdge> both;
    both.reserve(edges.size() * 2);
    for (const auto& e : edges) {
      both.push_back(e);
      both.push_back({e.dst, e.src, e.weight});
    }
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(both.size());
    edges.clear();
    for (const auto& e : both)
      if (seen.insert(detail::pair_key(e.src, e.dst)).second) edges.push_back(e);
  }
  auto g = detail::build_csr(n, edges);
  g.validate();
  return g;
}

enum class EdgeListFormat { EdgeList, MatrixMarket };

struct LoadOptions {
  EdgeListFormat format = EdgeListFormat::EdgeList;
  std::optional<VertexId> n;  // declared vertex count; overrides any header
  std::uint64_t seed = 0;     // for weights missing from the input
  bool symmetrize = false;
};

inline constexpr Value kMaxGeneratedWeight = 100;

namespace detail {

inline bool parse_u64(const std::string& tok, std::uint64_t& out) {
  if (tok.empty() || tok.size() > 19) return false;
  std::uint64_t v = 0;
  for (char c : tok) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + static_cast<std::uint64_t>(c - '0');
  }
  out = v;
  return true;
}

inline std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> toks;
  std::istringstream in(line);
  for (std::string t; in >> t;) toks.push_back(t);
  return toks;
}

}  // namespace detail

// Reads "u v [w]" lines (edge-list) or a coordinate MatrixMarket body.
inline GlobalGraph load_edge_list(std::istream& in, const LoadOptions& opt = {}) {
  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<Value> weight_dist(0, kMaxGeneratedWeight);

  // Declared vertex count; kNoCount until a header or the caller sets it.
  constexpr std::uint64_t kNoCount = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t declared_n = opt.n ? *opt.n : kNoCount;
  std::optional<std::uint64_t> declared_m;
  bool one_based = opt.format == EdgeListFormat::MatrixMarket;
  bool mm_symmetric = false;
  bool mm_size_seen = false;

  std::vector<WeightedEdge> edges;
  std::uint64_t max_id = 0;
  bool any = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto toks = detail::split_ws(line);
    if (toks.empty()) continue;

    if (opt.format == EdgeListFormat::MatrixMarket) {
      if (toks[0].starts_with("%%MatrixMarket")) {
        for (const auto& t : toks) mm_symmetric |= (t == "symmetric");
        continue;
      }
      if (toks[0].starts_with("%")) continue;
      if (!mm_size_seen) {
        std::uint64_t rows, cols, nnz;
        if (toks.size() != 3 || !detail::parse_u64(toks[0], rows) ||
            !detail::parse_u64(toks[1], cols) || !detail::parse_u64(toks[2], nnz))
          throw ParseError(lineno, 1, "expected matrix-market size line 'rows cols nnz'");
        if (!opt.n) declared_n = std::max(rows, cols);
        declared_m = nnz;
        mm_size_seen = true;
        continue;
      }
    } else if (toks[0].starts_with("#")) {
      // Only a leading "# n m" counts as a header; other comments are skipped.
      std::uint64_t hn, hm;
      std::vector<std::string> rest(toks.begin(), toks.end());
      if (rest[0] == "#") rest.erase(rest.begin()); else rest[0] = rest[0].substr(1);
      if (edges.empty() && !any && rest.size() == 2 && detail::parse_u64(rest[0], hn) &&
          detail::parse_u64(rest[1], hm)) {
        if (!opt.n) declared_n = hn;
        declared_m = hm;
      }
      continue;
    } else if (toks[0].starts_with("%")) {
      continue;
    }

    if (toks.size() < 2 || toks.size() > 3)
      throw ParseError(lineno, 1, "expected 'u v [w]'");
    std::uint64_t u, v, w = 0;
    if (!detail::parse_u64(toks[0], u))
      throw ParseError(lineno, 1, "malformed source id '" + toks[0] + "'");
    if (!detail::parse_u64(toks[1], v))
      throw ParseError(lineno, static_cast<int>(toks[0].size()) + 2,
                       "malformed target id '" + toks[1] + "'");
    bool has_weight = toks.size() == 3;
    if (has_weight) {
      // MatrixMarket real values are truncated toward zero.
      std::string wt = toks[2];
      if (auto dot = wt.find('.'); dot != std::string::npos &&
                                   opt.format == EdgeListFormat::MatrixMarket)
        wt = wt.substr(0, dot);
      if (!detail::parse_u64(wt, w) || w > static_cast<std::uint64_t>(kInf))
        throw ParseError(lineno, 1, "malformed weight '" + toks[2] + "'");
    }
    if (one_based) {
      if (u == 0 || v == 0) throw ParseError(lineno, 1, "matrix-market ids are 1-based");
      --u;
      --v;
    }
    if (u >= declared_n || v >= declared_n)
      throw BoundsError("line " + std::to_string(lineno) + ": vertex id " +
                        std::to_string(std::max(u, v)) + " >= declared n=" + std::to_string(declared_n));
    if (u >= kInf || v >= kInf)
      throw BoundsError("line " + std::to_string(lineno) + ": vertex id too large");
    max_id = std::max({max_id, u, v});
    any = true;
    Value wv = has_weight ? static_cast<Value>(w) : weight_dist(rng);
    edges.push_back({static_cast<VertexId>(u), static_cast<VertexId>(v), wv});
  }
  if (declared_m && *declared_m != edges.size())
    throw ParseError(lineno + 1, 1, "header declares m=" + std::to_string(*declared_m) +
                                        " but found " + std::to_string(edges.size()) +
                                        " edges");
  std::uint64_t n = declared_n != kNoCount ? declared_n : (any ? max_id + 1 : 0);
  return from_edges(static_cast<VertexId>(n), std::move(edges),
                    opt.symmetrize || mm_symmetric);
}

inline void write_edge_list(std::ostream& out, const GlobalGraph& g) {
  out << "# " << g.n << ' ' << g.m() << '\n';
  for (VertexId v = 0; v < g.n; ++v)
    for (EdgeIndex i = g.offsets[v]; i < g.offsets[v + 1]; ++i)
      out << v << ' ' << g.targets[i] << ' ' << g.weights[i] << '\n';
}

// Binary snapshot: magic, u32 version, u64 n, u64 m, u64 offsets[n+1],
// u32 targets[m], u32 weights[m]; all little-endian.
inline constexpr std::array<char, 8> kSnapshotMagic{'P', 'U', 'L', 'S', 'E', 'C', 'S', 'R'};
inline constexpr std::uint32_t kSnapshotVersion = 1;

namespace detail {

template <typename T>
void put_le(std::ostream& out, T v) {
  std::array<char, sizeof(T)> buf;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    buf[i] = static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xffu);
  out.write(buf.data(), buf.size());
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> buf;
  if (!in.read(reinterpret_cast<char*>(buf.data()), buf.size()))
    throw ParseError(0, 0, "snapshot truncated");
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= std::uint64_t{buf[i]} << (8 * i);
  return static_cast<T>(v);
}

}  // namespace detail

inline void save_binary(std::ostream& out, const GlobalGraph& g) {
  out.write(kSnapshotMagic.data(), kSnapshotMagic.size());
  detail::put_le<std::uint32_t>(out, kSnapshotVersion);
  detail::put_le<std::uint64_t>(out, g.n);
  detail::put_le<std::uint64_t>(out, g.m());
  for (auto o : g.offsets) detail::put_le<std::uint64_t>(out, o);
  for (auto t : g.targets) detail::put_le<std::uint32_t>(out, t);
  for (auto w : g.weights) detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(w));
}

inline GlobalGraph load_binary(std::istream& in) {
  std::array<char, 8> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kSnapshotMagic)
    throw ParseError(0, 0, "not a graph snapshot (bad magic)");
  auto version = detail::get_le<std::uint32_t>(in);
  if (version != kSnapshotVersion)
    throw ParseError(0, 0, "unsupported snapshot version " + std::to_string(version));
  GlobalGraph g;
  auto n = detail::get_le<std::uint64_t>(in);
  auto m = detail::get_le<std::uint64_t>(in);
  if (n >= kInf) throw BoundsError("snapshot n too large");
  g.n = static_cast<VertexId>(n);
  g.offsets.resize(n + 1);
  for (auto& o : g.offsets) o = detail::get_le<std::uint64_t>(in);
  g.targets.resize(m);
  for (auto& t : g.targets) t = detail::get_le<std::uint32_t>(in);
  g.weights.resize(m);
  for (auto& w : g.weights) w = static_cast<Value>(detail::get_le<std::uint32_t>(in));
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// Generators. Both produce simple graphs: no self-loops, no parallel edges.

inline GlobalGraph uniform_random(VertexId n, EdgeIndex m, std::uint64_t seed) {
  if (n < 2 && m > 0) throw ConfigError("uniform_random: need n >= 2 for edges");
  if (m > std::uint64_t{n} * (n - (n > 0 ? 1 : 0)))
    throw ConfigError("uniform_random: m exceeds n(n-1)");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<VertexId> vd(0, n > 0 ? n - 1 : 0);
  std::uniform_int_distribution<Value> wd(0, kMaxGeneratedWeight);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(m * 2);
  std::vector<WeightedEdge> edges;
  edges.reserve(m);
  while (edges.size() < m) {
    VertexId u = vd(rng), v = vd(rng);
    if (u == v || !seen.insert(detail::pair_key(u, v)).second) continue;
    edges.push_back({u, v, 0});
  }
  for (auto& e : edges) e.weight = wd(rng);
  return from_edges(n, std::move(edges));
}

// Recursive-matrix generator with the Graph500 quadrant probabilities.
inline GlobalGraph rmat(int scale, int edge_factor, std::uint64_t seed) {
  if (scale < 1 || scale > 30 || edge_factor < 1)
    throw ConfigError("rmat: scale must be in [1,30] and edge_factor >= 1");
  const VertexId n = VertexId{1} << scale;
  const EdgeIndex m = EdgeIndex{n} * static_cast<EdgeIndex>(edge_factor);
  if (m > std::uint64_t{n} * (n - 1)) throw ConfigError("rmat: too many edges for scale");
  constexpr double a = 0.57, b = 0.19, c = 0.19;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<Value> wd(0, kMaxGeneratedWeight);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(m * 2);
  std::vector<WeightedEdge> edges;
  edges.reserve(m);
  const std::uint64_t max_attempts = m * 200;
  for (std::uint64_t attempt = 0; edges.size() < m; ++attempt) {
    if (attempt > max_attempts) throw ConfigError("rmat: could not place enough distinct edges");
    VertexId u = 0, v = 0;
    for (int bit = 0; bit < scale; ++bit) {
      double p = coin(rng);
      u <<= 1;
      v <<= 1;
      if (p < a) {
      } else if (p < a + b) {
        v |= 1;
      } else if (p < a + b + c) {
        u |= 1;
      } else {
        u |= 1;
        v |= 1;
      }
    }
    if (u == v || !seen.insert(detail::pair_key(u, v)).second) continue;
    edges.push_back({u, v, 0});
  }
  for (auto& e : edges) e.weight = wd(rng);
  return from_edges(n, std::move(edges));
}

// Directed path 0 -> 1 -> ... -> n-1.
inline GlobalGraph path_graph(VertexId n, Value weight = 1) {
  std::vector<WeightedEdge> edges;
  for (VertexId v = 0; v + 1 < n; ++v) edges.push_back({v, v + 1, weight});
  return from_edges(n, std::move(edges));
}

// Two disjoint undirected triangles {0,1,2} and {3,4,5}.
inline GlobalGraph two_triangles() {
  std::vector<WeightedEdge> edges{{0, 1, 1}, {1, 2, 1}, {2, 0, 1},
                                  {3, 4, 1}, {4, 5, 1}, {5, 3, 1}};
  return from_edges(6, std::move(edges), true);
}

// Every leaf points at one hub: hub in-degree n-1.
inline GlobalGraph star_in(VertexId n, VertexId hub = 0) {
  std::vector<WeightedEdge> edges;
  for (VertexId v = 0; v < n; ++v)
    if (v != hub) edges.push_back({v, hub, 1});
  return from_edges(n, std::move(edges));
}

// ---------------------------------------------------------------------------
// Block partitioning: no ghost or mirror vertices, every vertex has exactly
// one owner and its out-edges live with it.

class Partition {
 public:
  Partition() = default;
  Partition(VertexId n, int world_size) : n_(n), world_size_(world_size) {
    if (world_size < 1) throw ConfigError("world size must be >= 1");
    if (static_cast<std::uint64_t>(world_size) > n)
      throw ConfigError("world size " + std::to_string(world_size) + " exceeds n=" +
                        std::to_string(n));
    base_ = n / static_cast<VertexId>(world_size);
    extra_ = n % static_cast<VertexId>(world_size);
    starts_.resize(static_cast<std::size_t>(world_size) + 1);
    starts_[0] = 0;
    for (int r = 0; r < world_size; ++r)
      starts_[r + 1] = starts_[r] + base_ + (static_cast<VertexId>(r) < extra_ ? 1 : 0);
  }

  VertexId n() const { return n_; }
  int world_size() const { return world_size_; }
  VertexId begin(Rank r) const { return starts_[r]; }
  VertexId end(Rank r) const { return starts_[r + 1]; }
  VertexId size(Rank r) const { return end(r) - begin(r); }

  Rank owner(VertexId v) const {
    const VertexId fat = extra_ * (base_ + 1);
    if (v < fat) return static_cast<Rank>(v / (base_ + 1));
    return static_cast<Rank>(extra_ + (v - fat) / base_);
  }

  VertexId to_local(VertexId v) const { return v - starts_[owner(v)]; }
  VertexId to_global(Rank r, VertexId local) const { return starts_[r] + local; }

 private:
  VertexId n_ = 0;
  int world_size_ = 1;
  VertexId base_ = 0;
  VertexId extra_ = 0;
  std::vector<VertexId> starts_{0, 0};
};

inline Partition partition_ranges(VertexId n, int world_size) { return {n, world_size}; }

struct EdgeHandle {
  VertexId src;
  EdgeIndex position;  // index within src's adjacency
  friend bool operator==(const EdgeHandle&, const EdgeHandle&) = default;
};

// Per-rank CSR over owned vertices; targets stay global ids.
struct LocalCsr {
  std::vector<EdgeIndex> offsets{0};
  std::vector<VertexId> targets;
  std::vector<Value> weights;
};

class PartitionedGraph {
 public:
  PartitionedGraph(const GlobalGraph& g, int world_size)
      : partition_(g.n, world_size), locals_(static_cast<std::size_t>(world_size)) {
    for (Rank r = 0; r < world_size; ++r) {
      auto& lc = locals_[r];
      const VertexId b = partition_.begin(r), e = partition_.end(r);
      const EdgeIndex base = g.offsets[b];
      lc.offsets.resize(std::size_t{e - b} + 1);
      for (VertexId v = b; v <= e; ++v) lc.offsets[v - b] = g.offsets[v] - base;
      lc.targets.assign(g.targets.begin() + static_cast<std::ptrdiff_t>(base),
                        g.targets.begin() + static_cast<std::ptrdiff_t>(g.offsets[e]));
      lc.weights.assign(g.weights.begin() + static_cast<std::ptrdiff_t>(base),
                        g.weights.begin() + static_cast<std::ptrdiff_t>(g.offsets[e]));
    }
  }

  const Partition& partition() const { return partition_; }
  int world_size() const { return partition_.world_size(); }
  VertexId n() const { return partition_.n(); }
  Rank owner(VertexId v) const { return partition_.owner(v); }
  const LocalCsr& local(Rank r) const { return locals_[r]; }

  EdgeIndex degree(Rank r, VertexId v) const {
    auto l = check_owned(r, v);
    return locals_[r].offsets[l + 1] - locals_[r].offsets[l];
  }

  std::span<const VertexId> neighbors(Rank r, VertexId v) const {
    auto l = check_owned(r, v);
    const auto& lc = locals_[r];
    return {lc.targets.data() + lc.offsets[l],
            static_cast<std::size_t>(lc.offsets[l + 1] - lc.offsets[l])};
  }

  // Linear search for the first edge v -> nbr; every inspected slot is
  // charged to search_steps.
  EdgeHandle get_edge(Rank r, VertexId v, VertexId nbr, std::uint64_t& search_steps) const {
    auto adj = neighbors(r, v);
    for (std::size_t i = 0; i < adj.size(); ++i) {
      ++search_steps;
      if (adj[i] == nbr) return {v, i};
    }
    throw NotFoundError("no edge " + std::to_string(v) + " -> " + std::to_string(nbr));
  }

  // Positional access: one step per call.
  EdgeHandle get_edge_i(Rank r, VertexId v, EdgeIndex i, std::uint64_t& search_steps) const {
    if (i >= degree(r, v))
      throw BoundsError("edge position " + std::to_string(i) + " out of range for vertex " +
                        std::to_string(v));
    ++search_steps;
    return {v, i};
  }

  VertexId get_edge_other(Rank r, const EdgeHandle& e) const {
    auto adj = neighbors(r, e.src);
    if (e.position >= adj.size()) throw BoundsError("stale edge handle");
    return adj[e.position];
  }

  Value weight(Rank r, const EdgeHandle& e) const {
    auto l = check_owned(r, e.src);
    const auto& lc = locals_[r];
    if (e.position >= lc.offsets[l + 1] - lc.offsets[l]) throw BoundsError("stale edge handle");
    return lc.weights[lc.offsets[l] + e.position];
  }

  // Concatenation of the rank-local CSRs in rank order.
  GlobalGraph reassemble() const {
    GlobalGraph g;
    g.n = n();
    g.offsets.assign(1, 0);
    for (Rank r = 0; r < world_size(); ++r) {
      const auto& lc = locals_[r];
      const EdgeIndex base = g.targets.size();
      for (std::size_t i = 1; i < lc.offsets.size(); ++i) g.offsets.push_back(base + lc.offsets[i]);
      g.targets.insert(g.targets.end(), lc.targets.begin(), lc.targets.end());
      g.weights.insert(g.weights.end(), lc.weights.begin(), lc.weights.end());
    }
    return g;
  }

 private:
  VertexId check_owned(Rank r, VertexId v) const {
    if (v >= n()) throw BoundsError("vertex " + std::to_string(v) + " out of range");
    if (owner(v) != r)
      throw AccessViolation("rank " + std::to_string(r) + " touched the CSR of vertex " +
                            std::to_string(v) + " owned by rank " + std::to_string(owner(v)));
    return v - partition_.begin(r);
  }

  Partition partition_;
  std::vector<LocalCsr> locals_;
};

inline PartitionedGraph partition_block(const GlobalGraph& g, int world_size) {
  return PartitionedGraph(g, world_size);
}

// Dense per-rank arrays over owned vertices.
struct PropertyStore {
  std::string name;
  std::vector<std::vector<Value>> per_rank;

  PropertyStore(std::string name_, const Partition& p, Value init) : name(std::move(name_)) {
    per_rank.resize(static_cast<std::size_t>(p.world_size()));
    for (Rank r = 0; r < p.world_size(); ++r) per_rank[r].assign(p.size(r), init);
  }

  std::vector<Value> gather() const {
    std::vector<Value> out;
    for (const auto& a : per_rank) out.insert(out.end(), a.begin(), a.end());
    return out;
  }
};

}  // namespace pulse
