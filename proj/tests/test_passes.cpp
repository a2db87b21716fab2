#include <gtest/gtest.h>

#include "pulse/dsl/parser.hpp"
#include "pulse/passes.hpp"
#include "pulse/programs.hpp"
#include "support/suite.hpp"

using namespace pulse;

namespace {

Program corpus(const std::string& name) {
  return dsl::parse(testsupport::read_file(testsupport::data_path("corpus/" + name + ".sp")));
}

std::string after(const Program& p, const std::string& passes) {
  return dsl::pretty_print(optimize(p, parse_pass_set(passes)).program);
}

const PassReport& report(const OptimizeResult& r, Pass p) {
  for (const auto& s : r.steps)
    if (s.pass == p) return s.report;
  throw std::runtime_error("pass did not run");
}

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
  return n;
}

}  // namespace

TEST(PassSet, ParsesListsAndRejectsUnknownNames) {
  EXPECT_EQ(parse_pass_set("all"), PassSet::all());
  EXPECT_EQ(parse_pass_set("none"), PassSet::none());
  EXPECT_EQ(parse_pass_set(""), PassSet::none());
  auto s = parse_pass_set("cache,reorder");
  EXPECT_TRUE(s.enabled(Pass::Reorder));
  EXPECT_TRUE(s.enabled(Pass::Cache));
  EXPECT_FALSE(s.enabled(Pass::Pulses));
  EXPECT_EQ(s.to_string(), "reorder,cache");
  EXPECT_THROW(parse_pass_set("reorder,fast"), ConfigError);
  EXPECT_EQ(PassSet::from_mask(15), PassSet::all());
  EXPECT_EQ(PassSet::from_mask(0), PassSet::none());
}

TEST(Optimize, RunsPassesInFixedOrder) {
  auto r = optimize(corpus("sssp"), parse_pass_set("cache,bypass,pulses,reorder"));
  ASSERT_EQ(r.steps.size(), 4u);
  EXPECT_EQ(r.steps[0].pass, Pass::Reorder);
  EXPECT_EQ(r.steps[3].pass, Pass::Cache);
  for (std::size_t i = 1; i < r.steps.size(); ++i) EXPECT_EQ(r.steps[i].before, r.steps[i - 1].after);
}

TEST(Reorder, ReplacesEdgeSearchWithCounter) {
  auto text = after(corpus("edge_traversal"), "reorder");
  EXPECT_EQ(count(text, "get_edge("), 0);
  EXPECT_EQ(count(text, "g.get_edge_i(v, _t1)"), 1);
  EXPECT_EQ(count(text, "nbr = g.get_edge_other(v, e);"), 1);
  EXPECT_EQ(count(text, "_t1++;"), 1);
}

TEST(Reorder, FreshNameAvoidsExistingIdentifiers) {
  auto p = dsl::parse(
      "int _t1 = 0;\n"
      "forall v in g.nodes() { forall nbr in g.neighbors(v) { Edge e = g.get_edge(v, nbr); } }\n");
  auto text = after(p, "reorder");
  EXPECT_NE(text.find("int _t2 = 0;"), std::string::npos) << text;
}

TEST(Reorder, SkipsLoopsThatCarryStateAcrossNeighbors) {
  auto p = dsl::parse(
      "int seen = 0;\n"
      "forall v in g.nodes() { forall nbr in g.neighbors(v) { Edge e = g.get_edge(v, nbr); seen++; } }\n");
  auto r = optimize(p, parse_pass_set("reorder"));
  EXPECT_FALSE(report(r, Pass::Reorder).fired);
  EXPECT_FALSE(report(r, Pass::Reorder).reason.empty());
}

TEST(Reorder, DoesNotFireWithoutEdgeQueries) {
  auto r = optimize(corpus("degree"), parse_pass_set("reorder"));
  EXPECT_FALSE(report(r, Pass::Reorder).fired);
  EXPECT_EQ(dsl::pretty_print(r.program), dsl::pretty_print(corpus("degree")));
}

TEST(Pulses, WrapsFrontierFixpoint) {
  auto r = optimize(corpus("frontier_min"), parse_pass_set("pulses"));
  EXPECT_TRUE(report(r, Pass::Pulses).fired);
  EXPECT_EQ(report(r, Pass::Pulses).sites, 1);
  auto text = dsl::pretty_print(r.program);
  EXPECT_EQ(count(text, "while (g.local_frontier())"), 1);
  EXPECT_EQ(count(text, "g.sync_reduction();"), 1);
  EXPECT_EQ(count(text, "g.all_finished(finished)"), 1);
  EXPECT_EQ(count(text, "!g.reduction_frontier()"), 0);
}

TEST(Pulses, FreshFlagName) {
  auto p = dsl::parse(
      "propNodes<int> x = INF; int finished = 3; fixSource(x, SOURCE, 0);\n"
      "while (!g.reduction_frontier()) { forall (v in g.reduction_frontier()) {\n"
      "  forall nbr in g.neighbors(v) { <nbr.x> = <Min(nbr.x, v.x)>; } } }\n");
  auto text = after(p, "pulses");
  EXPECT_NE(text.find("bool finished_2 = false;"), std::string::npos) << text;
}

TEST(Pulses, SkipsBodiesWithPlainWrites) {
  auto p = dsl::parse(
      "propNodes<int> x = INF; propNodes<int> y = 0; fixSource(x, SOURCE, 0);\n"
      "while (!g.reduction_frontier()) { forall (v in g.reduction_frontier()) {\n"
      "  v.y = 1;\n"
      "  forall nbr in g.neighbors(v) { <nbr.x> = <Min(nbr.x, v.x)>; } } }\n");
  auto r = optimize(p, parse_pass_set("pulses"));
  EXPECT_FALSE(report(r, Pass::Pulses).fired);
  EXPECT_NE(report(r, Pass::Pulses).reason.find("writes properties"), std::string::npos);
}

TEST(Bypass, GuardsMonotonicReductionsInsideFixpoints) {
  auto text = after(corpus("frontier_min"), "bypass");
  EXPECT_EQ(count(text, "if (g.is_local(nbr))"), 1);
  EXPECT_EQ(count(text, "local<Min("), 1);
  EXPECT_EQ(count(text, "queue<Min("), 1);
}

TEST(Bypass, QueuesOutsideFixpointsAndForSums) {
  auto once = after(corpus("max_label"), "bypass");
  EXPECT_EQ(count(once, "is_local"), 0);
  EXPECT_EQ(count(once, "queue<Max(nbr.label, label.localdata[local(v)])>"), 1);
  auto sum = after(corpus("degree"), "bypass");
  EXPECT_EQ(count(sum, "queue<Sum(nbr.deg, 1)>"), 1);
}

TEST(Bypass, SkipsNonExclusiveLoops) {
  auto p = dsl::parse(
      "propNodes<int> x = 0; propNodes<int> b = 0;\n"
      "forall v in g.nodes() { v.b = 3; forall nbr in g.neighbors(v) { <nbr.x> = <Sum(nbr.x, v.b)>; } }\n");
  auto r = optimize(p, parse_pass_set("bypass"));
  EXPECT_FALSE(report(r, Pass::Bypass).fired);
  EXPECT_NE(report(r, Pass::Bypass).reason.find("not reduction-exclusive"), std::string::npos);
}

TEST(Cache, MemoizesRemoteReadsOfOtherProperties) {
  auto r = optimize(corpus("neighbor_pull"), parse_pass_set("cache"));
  EXPECT_TRUE(report(r, Pass::Cache).fired);
  auto text = dsl::pretty_print(r.program);
  EXPECT_EQ(count(text, "map cache_b;"), 1);
  EXPECT_EQ(count(text, "cache_b.clear();"), 1);
  EXPECT_EQ(count(text, "b.cached(nbr)"), 1);
  EXPECT_LT(text.find("map cache_b;"), text.find("b.cached(nbr)"));
  EXPECT_LT(text.find("b.cached(nbr)"), text.find("cache_b.clear();"));
}

TEST(Cache, NeverMemoizesTheReductionTarget) {
  auto r = optimize(corpus("neighbor_count"), parse_pass_set("cache"));
  EXPECT_FALSE(report(r, Pass::Cache).fired);
  auto s = optimize(corpus("sssp"), PassSet::all());
  EXPECT_EQ(count(dsl::pretty_print(s.program), ".cached("), 0);
}

TEST(Passes, EveryPassIsIdempotent) {
  for (const auto& name : testsupport::corpus_names()) {
    auto p = corpus(name);
    for (unsigned mask = 1; mask < 16; ++mask) {
      auto ps = PassSet::from_mask(mask);
      auto once = optimize(p, ps);
      auto twice = optimize(once.program, ps);
      EXPECT_EQ(dsl::pretty_print(twice.program), dsl::pretty_print(once.program))
          << name << " passes=" << ps.to_string();
      for (const auto& step : twice.steps) EXPECT_FALSE(step.report.fired) << name << " " << pass_name(step.pass);
    }
  }
}

TEST(Passes, OutputsReparse) {
  for (const auto& name : testsupport::corpus_names())
    for (unsigned mask = 0; mask < 16; ++mask) {
      auto out = optimize(corpus(name), PassSet::from_mask(mask)).program;
      auto text = dsl::pretty_print(out);
      EXPECT_TRUE(dsl::same(dsl::parse(text), out)) << name << " mask " << mask << "\n" << text;
    }
}
