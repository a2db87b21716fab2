#pragma once

#include <chrono>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pulse/config.hpp"
#include "pulse/dsl/parser.hpp"
#include "pulse/engine/execute.hpp"
#include "pulse/engine/plan.hpp"
#include "pulse/engine/reference.hpp"
#include "pulse/oracle.hpp"
#include "pulse/passes.hpp"
#include "pulse/programs.hpp"

namespace pulse::bench {

using json = nlohmann::ordered_json;

namespace detail {

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  return out;
}

inline std::uint64_t spec_number(const std::string& spec, const std::string& tok) {
  try {
    std::size_t used = 0;
    auto v = std::stoull(tok, &used);
    if (used == tok.size() && !tok.empty() && tok[0] != '-') return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("bad number '" + tok + "' in graph spec '" + spec + "'");
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace detail

// A generator spec (ur:N:M, rmat:S:EF, path:N, two-triangles, star:N) or a
// file path (.bin snapshot, .mtx Matrix Market, anything else an edge list).
inline GlobalGraph make_graph(const std::string& spec, std::uint64_t seed = 1, bool symmetrize = false) {
  using detail::spec_number;
  auto parts = detail::split(spec, ':');
  GlobalGraph g;
  if (!parts.empty() && parts[0] == "ur" && parts.size() == 3) {
    g = uniform_random(static_cast<VertexId>(spec_number(spec, parts[1])), spec_number(spec, parts[2]), seed);
  } else if (!parts.empty() && parts[0] == "rmat" && parts.size() == 3) {
    g = rmat(static_cast<int>(spec_number(spec, parts[1])), static_cast<int>(spec_number(spec, parts[2])), seed);
  } else if (!parts.empty() && parts[0] == "path" && parts.size() == 2) {
    g = path_graph(static_cast<VertexId>(spec_number(spec, parts[1])));
  } else if (!parts.empty() && parts[0] == "star" && parts.size() == 2) {
    g = star_in(static_cast<VertexId>(spec_number(spec, parts[1])));
  } else if (spec == "two-triangles") {
    g = two_triangles();
  } else {
    std::ifstream in(spec, std::ios::binary);
    if (!in) throw NotFoundError("cannot open graph '" + spec + "'");
    if (detail::ends_with(spec, ".bin")) {
      g = load_binary(in);
    } else {
      LoadOptions opt;
      opt.seed = seed;
      if (detail::ends_with(spec, ".mtx")) opt.format = EdgeListFormat::MatrixMarket;
      g = load_edge_list(in, opt);
    }
  }
  if (symmetrize) g = from_edges(g.n, g.edges(), true);
  return g;
}

struct ProgramSource {
  std::string name;  // built-in name, or the file path
  std::string text;
  std::string result_property;  // empty: the last declared property
  bool builtin = false;
  bool needs_symmetric = false;
};

inline ProgramSource load_program(const std::string& name_or_path) {
  ProgramSource p;
  p.name = name_or_path;
  if (auto it = programs::builtins().find(name_or_path); it != programs::builtins().end()) {
    p.text = std::string(it->second.source);
    p.result_property = std::string(it->second.result_property);
    p.builtin = true;
    p.needs_symmetric = it->second.needs_symmetric;
    return p;
  }
  std::ifstream in(name_or_path);
  if (!in) throw NotFoundError("cannot open program '" + name_or_path + "' (built-ins: sssp, cc, degree)");
  std::ostringstream ss;
  ss << in.rdbuf();
  p.text = ss.str();
  return p;
}

struct RunOutput {
  OptimizeResult optimized;
  engine::ExecPlan plan;
  engine::RunResult result;
  double wall_ms = 0;
};

inline RunOutput run_program(const dsl::Program& program, const GlobalGraph& g, const RunConfig& cfg) {
  RunOutput out;
  out.optimized = optimize(program, cfg.passes);
  out.plan = engine::lower(out.optimized.program);
  PartitionedGraph pg(g, cfg.world.world_size);
  runtime::World world(pg, cfg.world);
  auto t0 = std::chrono::steady_clock::now();
  out.result = engine::execute(out.plan, pg, world, {cfg.source});
  out.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline std::string result_property(const ProgramSource& src, const engine::PropertyArrays& props) {
  if (!src.result_property.empty()) return src.result_property;
  if (props.names.empty()) throw ConfigError("program declares no property");
  return props.names.back();
}

// "vertex value" per line in global-id order.
inline std::string format_result(const std::vector<Value>& values) {
  std::ostringstream out;
  for (std::size_t v = 0; v < values.size(); ++v) out << v << ' ' << format_value(values[v]) << '\n';
  return out.str();
}

struct Verdict {
  bool ok = true;
  std::string oracle;
  std::string message;
};

inline Verdict compare(const std::vector<Value>& got, const std::vector<Value>& want, const std::string& oracle) {
  Verdict v{true, oracle, "match"};
  if (got.size() != want.size()) return {false, oracle, "length " + std::to_string(got.size()) + " vs " + std::to_string(want.size())};
  for (std::size_t i = 0; i < got.size(); ++i)
    if (got[i] != want[i])
      return {false, oracle,
              "vertex " + std::to_string(i) + ": got " + format_value(got[i]) + ", expected " + format_value(want[i])};
  return v;
}

// Built-ins are checked against their oracle; any other program against the
// reference interpreter.
inline Verdict verify(const ProgramSource& src, const dsl::Program& program, const GlobalGraph& g,
                      const RunConfig& cfg, const engine::PropertyArrays& props) {
  const std::string prop = result_property(src, props);
  const auto& got = props.at(prop);
  if (src.builtin && src.name == "sssp") return compare(got, oracle::dijkstra(g, cfg.source), "dijkstra");
  if (src.builtin && src.name == "degree") return compare(got, oracle::in_degree(g), "in-degree");
  if (src.builtin && src.name == "cc") {
    auto want = oracle::component_min_labels(g);
    auto v = compare(got, want, "union-find");
    auto gc = oracle::distinct_labels(got);
    auto wc = oracle::component_count(g);
    if (v.ok && gc != wc) v = {false, "union-find", "component count " + std::to_string(gc) + " vs " + std::to_string(wc)};
    if (v.ok) v.message = std::to_string(wc) + " components";
    return v;
  }
  auto ref = engine::execute_reference(program, g, cfg.source, cfg.world.max_pulses);
  return compare(got, ref.at(prop), "reference");
}

struct BenchSuite {
  std::vector<std::string> programs{"sssp", "cc", "degree"};
  std::vector<std::string> graphs{"path:64", "two-triangles", "ur:10000:80000", "rmat:14:8"};
  std::vector<int> ranks{1, 2, 4, 8};
  std::vector<std::string> pass_sets{"none", "all"};
  bool legacy_baseline = true;  // extra all-passes row per cell under the dense exchange
  RunConfig base;
};

struct BenchRow {
  std::string program, graph, passes, sync_mode;
  int ranks = 1;
  runtime::Metrics metrics;
  double wall_ms = 0;
  Verdict verdict;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  json ratios = json::array();
  bool all_ok() const {
    for (const auto& r : rows)
      if (!r.verdict.ok) return false;
    return true;
  }
};

namespace detail {

inline double ratio(std::uint64_t a, std::uint64_t b) {
  return b == 0 ? (a == 0 ? 1.0 : 0.0) : static_cast<double>(a) / static_cast<double>(b);
}

inline const BenchRow* find_row(const std::vector<BenchRow>& rows, const BenchRow& like, const std::string& passes,
                                const std::string& mode) {
  for (const auto& r : rows)
    if (r.program == like.program && r.graph == like.graph && r.ranks == like.ranks && r.passes == passes &&
        r.sync_mode == mode)
      return &r;
  return nullptr;
}

}  // namespace detail

inline BenchReport run_bench(const BenchSuite& suite, const std::function<void(const BenchRow&)>& progress = {}) {
  BenchReport rep;
  for (const auto& pname : suite.programs) {
    auto src = load_program(pname);
    auto program = dsl::parse(src.text);
    for (const auto& gspec : suite.graphs) {
      auto g = make_graph(gspec, suite.base.world.seed ? suite.base.world.seed : 1, src.needs_symmetric);
      for (int R : suite.ranks) {
        if (static_cast<VertexId>(R) > g.n) continue;
        std::vector<std::pair<std::string, runtime::SyncMode>> variants;
        for (const auto& ps : suite.pass_sets) variants.emplace_back(ps, runtime::SyncMode::Bulk);
        if (suite.legacy_baseline) variants.emplace_back("all", runtime::SyncMode::Legacy);
        for (const auto& [ps, mode] : variants) {
          RunConfig cfg = suite.base;
          cfg.world.world_size = R;
          cfg.world.sync_mode = mode;
          cfg.passes = parse_pass_set(ps);
          BenchRow row;
          row.program = pname;
          row.graph = gspec;
          row.passes = cfg.passes.to_string();
          row.sync_mode = mode == runtime::SyncMode::Bulk ? "bulk" : "legacy";
          row.ranks = R;
          try {
            auto out = run_program(program, g, cfg);
            row.metrics = out.result.metrics;
            row.wall_ms = out.wall_ms;
            row.verdict = verify(src, program, g, cfg, out.result.props);
          } catch (const Error& e) {
            row.verdict = {false, "run", e.what()};
          }
          if (progress) progress(row);
          rep.rows.push_back(std::move(row));
        }
      }
    }
  }
  for (const auto& r : rep.rows) {
    if (r.passes != "none" || r.sync_mode != "bulk") continue;
    const auto* opt = detail::find_row(rep.rows, r, "reorder,pulses,bypass,cache", "bulk");
    const auto* legacy = detail::find_row(rep.rows, r, "reorder,pulses,bypass,cache", "legacy");
    if (!opt) continue;
    json j;
    j["program"] = r.program;
    j["graph"] = r.graph;
    j["ranks"] = r.ranks;
    j["edge_search_steps"] = detail::ratio(r.metrics.edge_search_steps, opt->metrics.edge_search_steps);
    j["remote_gets"] = detail::ratio(r.metrics.remote_gets, opt->metrics.remote_gets);
    j["all_gets"] = detail::ratio(r.metrics.remote_gets + r.metrics.local_gets,
                                  opt->metrics.remote_gets + opt->metrics.local_gets);
    j["sync_rounds"] = detail::ratio(r.metrics.sync_rounds, opt->metrics.sync_rounds);
    if (legacy) {
      j["legacy_vs_bulk_messages"] = detail::ratio(legacy->metrics.messages, opt->metrics.messages);
      j["legacy_vs_bulk_bytes"] = detail::ratio(legacy->metrics.bytes_window_traffic, opt->metrics.bytes_window_traffic);
    }
    rep.ratios.push_back(std::move(j));
  }
  return rep;
}

inline json to_json(const BenchReport& rep, bool with_wall = true) {
  json rows = json::array();
  for (const auto& r : rep.rows) {
    json j;
    j["program"] = r.program;
    j["graph"] = r.graph;
    j["ranks"] = r.ranks;
    j["passes"] = r.passes;
    j["sync_mode"] = r.sync_mode;
    j["verdict"] = r.verdict.ok ? "PASS" : "FAIL";
    j["oracle"] = r.verdict.oracle;
    j["detail"] = r.verdict.message;
    if (with_wall) j["wall_ms"] = r.wall_ms;
    j["metrics"] = runtime::to_json(r.metrics, false);
    rows.push_back(std::move(j));
  }
  json out;
  out["rows"] = std::move(rows);
  out["ratios"] = rep.ratios;
  out["all_verified"] = rep.all_ok();
  return out;
}

inline std::string to_markdown(const BenchReport& rep) {
  std::ostringstream out;
  out << "| program | graph | R | passes | sync | verdict | remote gets | local gets | bypassed | edge steps | "
         "syncs | messages | bytes | wall ms |\n";
  out << "|---|---|---|---|---|---|---|---|---|---|---|---|---|---|\n";
  for (const auto& r : rep.rows) {
    const auto& m = r.metrics;
    out << "| " << r.program << " | " << r.graph << " | " << r.ranks << " | " << r.passes << " | " << r.sync_mode
        << " | " << (r.verdict.ok ? "PASS" : "FAIL: " + r.verdict.message) << " | " << m.remote_gets << " | "
        << m.local_gets << " | " << m.bypassed_gets << " | " << m.edge_search_steps << " | " << m.sync_rounds << " | "
        << m.messages << " | " << m.bytes_window_traffic << " | " << std::fixed << std::setprecision(1) << r.wall_ms
        << " |\n";
  }
  if (!rep.ratios.empty()) {
    out << "\nRatios (no passes / all passes, same program, graph and R):\n\n";
    out << "| program | graph | R | edge steps | remote gets | all gets | syncs | legacy/bulk messages |\n";
    out << "|---|---|---|---|---|---|---|---|\n";
    out << std::setprecision(2);
    for (const auto& j : rep.ratios) {
      out << "| " << j["program"].get<std::string>() << " | " << j["graph"].get<std::string>() << " | "
          << j["ranks"].get<int>() << " | " << j["edge_search_steps"].get<double>() << " | "
          << j["remote_gets"].get<double>() << " | " << j["all_gets"].get<double>() << " | "
          << j["sync_rounds"].get<double>() << " | "
          << (j.contains("legacy_vs_bulk_messages") ? std::to_string(j["legacy_vs_bulk_messages"].get<double>()) : "-")
          << " |\n";
    }
  }
  return out.str();
}

}  // namespace pulse::bench
