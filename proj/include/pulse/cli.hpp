#pragma once

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pulse/bench.hpp"
#include "pulse/config.hpp"
#include "pulse/dsl/parser.hpp"
#include "pulse/dsl/printer.hpp"
#include "pulse/engine/plan.hpp"
#include "pulse/passes.hpp"

namespace pulse::cli {

enum ExitCode { kOk = 0, kUserError = 1, kOracleMismatch = 2, kNonTermination = 3 };

namespace detail {

inline std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace detail

// Line diff (longest common subsequence), one prefixed line per entry.
inline std::string line_diff(const std::string& before, const std::string& after) {
  auto a = detail::lines_of(before);
  auto b = detail::lines_of(after);
  std::vector<std::vector<int>> lcs(a.size() + 1, std::vector<int>(b.size() + 1, 0));
  for (std::size_t i = a.size(); i-- > 0;)
    for (std::size_t j = b.size(); j-- > 0;)
      lcs[i][j] = a[i] == b[j] ? lcs[i + 1][j + 1] + 1 : std::max(lcs[i + 1][j], lcs[i][j + 1]);
  std::ostringstream out;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    if (i < a.size() && j < b.size() && a[i] == b[j]) {
      out << "  " << a[i++] << '\n';
      ++j;
    } else if (j < b.size() && (i == a.size() || lcs[i][j + 1] >= lcs[i + 1][j])) {
      out << "+ " << b[j++] << '\n';
    } else {
      out << "- " << a[i++] << '\n';
    }
  }
  return out.str();
}

// Per fired pass: a header line, then the line diff of that pass.
inline std::string format_diffs(const OptimizeResult& r) {
  std::ostringstream out;
  for (const auto& step : r.steps) {
    if (!step.report.fired) continue;
    out << "=== " << pass_name(step.pass) << " (" << step.report.sites << " site"
        << (step.report.sites == 1 ? "" : "s") << ")\n";
    out << line_diff(step.before, step.after);
  }
  return out.str();
}

struct Options {
  int np = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  std::string config;
  std::string passes;
  bool passes_set = false;
  bool emit_diff = false;
  bool emit_plan = false;
  std::string format = "md";
};

inline RunConfig resolve_config(const Options& o) {
  RunConfig cfg;
  if (!o.config.empty()) {
    std::ifstream in(o.config);
    if (!in) throw NotFoundError("cannot open config '" + o.config + "'");
    cfg = parse_config(in, cfg);
  }
  if (o.np > 0) cfg.world.world_size = o.np;
  if (o.seed_set) cfg.world.seed = o.seed;
  if (o.passes_set) cfg.passes = parse_pass_set(o.passes);
  return cfg;
}

inline std::uint64_t graph_seed(const RunConfig& cfg) { return cfg.world.seed ? cfg.world.seed : 1; }

inline dsl::Program parse_with_file(const bench::ProgramSource& src) {
  try {
    return dsl::parse(src.text);
  } catch (const ParseError& e) {
    throw ParseError(e.line, e.col, e.message, src.name);
  }
}

inline bool write_text(const std::string& path, const std::string& text, std::ostream& err) {
  std::ofstream f(path, std::ios::binary);
  if (!f) {
    err << "pulse: cannot write '" << path << "'\n";
    return false;
  }
  f << text;
  return true;
}

// Entry point shared by the binary and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"pulse: graph DSL optimizer and simulated multi-rank runtime"};
  app.fallthrough();
  app.require_subcommand(1);
  Options o;
  app.add_option("--np", o.np, "world size (number of simulated ranks)")->check(CLI::Range(1, 1024));
  auto* seed_opt = app.add_option("--seed", o.seed, "seed for generated graphs and missing weights");
  app.add_option("--config", o.config, "run configuration file (key = value)");
  auto* passes_opt = app.add_option("--passes", o.passes, "passes to enable: none, all, or a comma list");
  app.add_flag("--emit-diff", o.emit_diff, "print the change made by each pass");
  app.add_flag("--emit-plan", o.emit_plan, "print the lowered execution plan");
  app.add_option("--format", o.format, "report format")->check(CLI::IsMember({"json", "md"}));

  std::string program, graph, out_path, metrics_path, expected_path;
  bool symmetrize = false;
  std::int64_t source = -1;
  std::vector<std::string> programs_list, graphs_list, pass_sets;
  std::vector<int> ranks_list;
  bool quick = false, no_legacy = false;

  auto* compile = app.add_subcommand("compile", "parse, optimize and lower a program");
  compile->add_option("program", program, "program file or built-in name")->required();

  auto graph_args = [&](CLI::App* sub) {
    sub->add_option("program", program, "program file or built-in name (sssp, cc, degree)")->required();
    sub->add_option("graph", graph, "graph file or generator (ur:N:M, rmat:S:EF, path:N, star:N, two-triangles)")
        ->required();
    sub->add_flag("--symmetrize", symmetrize, "add reverse edges before running");
    sub->add_option("--source", source, "source vertex (default 0)");
  };
  auto* run_cmd = app.add_subcommand("run", "run a program and write results and metrics");
  graph_args(run_cmd);
  run_cmd->add_option("-o,--out", out_path, "result file (\"vertex value\" lines)");
  run_cmd->add_option("--metrics", metrics_path, "metrics JSON file");

  auto* verify_cmd = app.add_subcommand("verify", "run a program and check it against an oracle");
  graph_args(verify_cmd);
  verify_cmd->add_option("--expected", expected_path, "expected \"vertex value\" file for user programs");

  auto* bench_cmd = app.add_subcommand("bench", "run a benchmark suite and report counters");
  bench_cmd->add_option("--programs", programs_list, "programs")->delimiter(',');
  bench_cmd->add_option("--graphs", graphs_list, "graph specs")->delimiter(',');
  bench_cmd->add_option("--ranks", ranks_list, "world sizes")->delimiter(',');
  bench_cmd->add_option("--pass-set", pass_sets, "pass set per column (repeatable)");
  bench_cmd->add_flag("--quick", quick, "small graphs only");
  bench_cmd->add_flag("--no-legacy", no_legacy, "skip the dense all-to-all baseline rows");
  bench_cmd->add_option("-o,--out", out_path, "report file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUserError;
  }
  o.seed_set = seed_opt->count() > 0;
  o.passes_set = passes_opt->count() > 0;

  std::string current_file;
  try {
    RunConfig cfg = resolve_config(o);
    if (source >= 0) cfg.source = static_cast<VertexId>(source);

    if (*compile) {
      auto src = bench::load_program(program);
      current_file = src.name;
      auto prog = parse_with_file(src);
      auto optimized = optimize(prog, cfg.passes);
      auto plan = engine::lower(optimized.program);
      if (o.emit_diff) out << format_diffs(optimized);
      if (o.emit_plan) out << engine::dump_plan(plan);
      if (!o.emit_diff && !o.emit_plan) out << dsl::pretty_print(optimized.program);
      for (const auto& step : optimized.steps)
        if (!step.report.fired) err << "note: " << pass_name(step.pass) << " did not fire: " << step.report.reason << "\n";
      return kOk;
    }

    if (*run_cmd || *verify_cmd) {
      auto src = bench::load_program(program);
      current_file = src.name;
      auto prog = parse_with_file(src);
      current_file = graph;
      auto g = bench::make_graph(graph, graph_seed(cfg), symmetrize || src.needs_symmetric);
      current_file = src.name;
      auto res = bench::run_program(prog, g, cfg);
      if (o.emit_diff) out << format_diffs(res.optimized);
      if (o.emit_plan) out << engine::dump_plan(res.plan);
      auto prop = bench::result_property(src, res.result.props);
      const auto& values = res.result.props.at(prop);

      if (*run_cmd) {
        auto text = bench::format_result(values);
        auto metrics = runtime::to_json(res.result.metrics).dump(2) + "\n";
        if (!out_path.empty()) {
          if (!write_text(out_path, text, err)) return kUserError;
        } else if (o.format != "json") {
          out << text;
        }
        if (!metrics_path.empty()) {
          if (!write_text(metrics_path, metrics, err)) return kUserError;
        } else if (o.format == "json") {
          out << metrics;
        }
        err << "pulse: " << src.name << " on " << graph << " (n=" << g.n << ", m=" << g.m() << ", R="
            << cfg.world.world_size << ", passes=" << cfg.passes.to_string() << "): " << res.result.metrics.sync_rounds
            << " pulses, " << res.result.metrics.remote_gets << " remote gets\n";
        return kOk;
      }

      bench::Verdict v;
      if (!expected_path.empty()) {
        std::ifstream in(expected_path);
        if (!in) throw NotFoundError("cannot open expected file '" + expected_path + "'");
        std::vector<Value> want(values.size(), 0);
        std::string line;
        while (std::getline(in, line)) {
          std::istringstream ls(line);
          std::uint64_t vtx;
          std::string val;
          if (!(ls >> vtx >> val)) continue;
          if (vtx >= want.size()) throw BoundsError("expected file names vertex " + std::to_string(vtx));
          want[vtx] = val == "INF" ? kInf : val == "-INF" ? kNegInf : static_cast<Value>(std::stol(val));
        }
        v = bench::compare(values, want, "expected file");
      } else {
        v = bench::verify(src, prog, g, cfg, res.result.props);
      }
      if (o.format == "json") {
        nlohmann::ordered_json j;
        j["program"] = src.name;
        j["graph"] = graph;
        j["ranks"] = cfg.world.world_size;
        j["passes"] = cfg.passes.to_string();
        j["verdict"] = v.ok ? "PASS" : "FAIL";
        j["oracle"] = v.oracle;
        j["detail"] = v.message;
        out << j.dump(2) << "\n";
      } else {
        out << (v.ok ? "PASS" : "FAIL") << " " << src.name << " vs " << v.oracle << ": " << v.message << "\n";
      }
      return v.ok ? kOk : kOracleMismatch;
    }

    if (*bench_cmd) {
      bench::BenchSuite suite;
      suite.base = cfg;
      if (quick) suite.graphs = {"path:64", "two-triangles", "ur:500:4000", "rmat:9:8"};
      if (!programs_list.empty()) suite.programs = programs_list;
      if (!graphs_list.empty()) suite.graphs = graphs_list;
      if (!ranks_list.empty()) suite.ranks = ranks_list;
      else if (o.np > 0) suite.ranks = {o.np};
      if (!pass_sets.empty()) suite.pass_sets = pass_sets;
      suite.legacy_baseline = !no_legacy;
      auto rep = bench::run_bench(suite, [&](const bench::BenchRow& r) {
        err << (r.verdict.ok ? "PASS " : "FAIL ") << r.program << " " << r.graph << " R=" << r.ranks << " "
            << r.passes << " " << r.sync_mode << "\n";
      });
      std::string text = o.format == "json" ? bench::to_json(rep).dump(2) + "\n" : bench::to_markdown(rep);
      if (!out_path.empty()) {
        if (!write_text(out_path, text, err)) return kUserError;
      } else {
        out << text;
      }
      return rep.all_ok() ? kOk : kOracleMismatch;
    }
  } catch (const NonTerminationError& e) {
    err << "pulse: non-termination: " << e.what() << "\n";
    return kNonTermination;
  } catch (const ParseError& e) {
    err << (e.file.empty() && !current_file.empty() ? current_file + ":" : "") << e.what() << "\n";
    return kUserError;
  } catch (const LowerError& e) {
    err << (current_file.empty() ? "" : current_file + ":") << e.what() << "\n";
    return kUserError;
  } catch (const Error& e) {
    err << "pulse: " << e.what() << "\n";
    return kUserError;
  }
  return kUserError;
}

}  // namespace pulse::cli
