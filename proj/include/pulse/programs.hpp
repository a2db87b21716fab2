#pragma once

#include <map>
#include <string>
#include <string_view>

#include "pulse/types.hpp"

namespace pulse::programs {

inline constexpr std::string_view kSssp = R"(# single-source shortest paths
propNodes<int> dist = INF;
fixSource(dist, SOURCE, 0);
while (!g.reduction_frontier()) {
  forall (v in g.reduction_frontier()) {
    forall nbr in g.neighbors(v) {
      Edge e = g.get_edge(v, nbr);
      <nbr.dist> = <Min(nbr.dist, v.dist + e.weight)>;
    }
  }
}
)";

// Minimum-label propagation; run on a symmetrized graph.
inline constexpr std::string_view kCc = R"(# connected components
propNodes<int> comp = INF;
forall v in g.nodes() {
  v.comp = v;
}
while (!g.reduction_frontier()) {
  forall (v in g.reduction_frontier()) {
    forall nbr in g.neighbors(v) {
      <nbr.comp> = <Min(nbr.comp, v.comp)>;
    }
  }
}
)";

inline constexpr std::string_view kDegree = R"(# in-degree
propNodes<int> deg = 0;
forall v in g.nodes() {
  forall nbr in g.neighbors(v) {
    <nbr.deg> = <Sum(nbr.deg, 1)>;
  }
}
)";

struct Builtin {
  std::string_view source;
  std::string_view result_property;
  bool needs_symmetric;
};

inline const std::map<std::string, Builtin>& builtins() {
  static const std::map<std::string, Builtin> table{
      {"sssp", {kSssp, "dist", false}},
      {"cc", {kCc, "comp", true}},
      {"degree", {kDegree, "deg", false}},
  };
  return table;
}

inline const Builtin& builtin(const std::string& name) {
  auto it = builtins().find(name);
  if (it == builtins().end()) throw NotFoundError("unknown program '" + name + "'");
  return it->second;
}

}  // namespace pulse::programs
