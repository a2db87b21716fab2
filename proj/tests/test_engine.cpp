#include <gtest/gtest.h>

#include "pulse/dsl/parser.hpp"
#include "pulse/engine/execute.hpp"
#include "pulse/engine/plan.hpp"
#include "pulse/engine/reference.hpp"
#include "pulse/passes.hpp"
#include "pulse/programs.hpp"
#include "support/oracles.hpp"
#include "support/suite.hpp"

using namespace pulse;
namespace ts = testsupport;

namespace {

std::string corpus_text(const std::string& name) {
  return ts::read_file(ts::data_path("corpus/" + name + ".sp"));
}

engine::ExecPlan compile(std::string_view src, const std::string& passes = "none") {
  return engine::lower(optimize(dsl::parse(src), parse_pass_set(passes)).program);
}

engine::RunResult run(const engine::ExecPlan& plan, const GlobalGraph& g, int r, VertexId source = 0,
                      std::uint64_t max_pulses = 0) {
  PartitionedGraph pg(g, r);
  runtime::WorldConfig c;
  c.world_size = r;
  c.max_pulses = max_pulses;
  runtime::World w(pg, c);
  return engine::execute(plan, pg, w, {source});
}

// k synchronous rounds of max-label propagation along out-edges.
std::vector<Value> max_label_rounds(const GlobalGraph& g, int k) {
  std::vector<Value> label(g.n);
  for (VertexId v = 0; v < g.n; ++v) label[v] = static_cast<Value>(v);
  for (int i = 0; i < k; ++i) {
    auto next = label;
    for (VertexId u = 0; u < g.n; ++u)
      for (auto e = g.offsets[u]; e < g.offsets[u + 1]; ++e)
        next[g.targets[e]] = std::max(next[g.targets[e]], label[u]);
    label = next;
  }
  return label;
}

}  // namespace

TEST(Lowering, PlanNamesReducedPropertiesAndOrigins) {
  auto plan = compile(programs::kSssp, "all");
  ASSERT_EQ(plan.reduced.size(), 1u);
  EXPECT_EQ(plan.reduced[0].second, ReductionOp::Min);
  auto text = engine::dump_plan(plan);
  EXPECT_NE(text.find("property dist reduced by Min"), std::string::npos);
  EXPECT_NE(text.find("[pulses]"), std::string::npos);
  EXPECT_NE(text.find("[bypass]"), std::string::npos);
  EXPECT_NE(text.find("[reorder]"), std::string::npos);
  EXPECT_NE(text.find("short-circuit-or-queue"), std::string::npos);
}

TEST(Lowering, ImplicitSyncAfterReducingNodeLoops) {
  auto text = engine::dump_plan(compile(programs::kDegree));
  EXPECT_NE(text.find("bulk_synchronize deg:Sum  (implicit)"), std::string::npos) << text;
}

TEST(Lowering, CollectiveSequences) {
  auto seq = [](const engine::ExecPlan& p) {
    std::string s;
    for (const auto& x : engine::collective_sequence(p)) s += x + " ";
    return s;
  };
  EXPECT_EQ(seq(compile(programs::kSssp)), "( allreduce:or sync )* ");
  EXPECT_EQ(seq(compile(programs::kSssp, "pulses")), "( sync allreduce:and )* ");
}

TEST(Lowering, RejectsCompositeReductions) {
  try {
    compile(corpus_text("composite_color"));
    FAIL();
  } catch (const LowerError& e) {
    EXPECT_NE(std::string(e.what()).find("5:5"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("composite"), std::string::npos);
  }
  EXPECT_THROW(engine::execute_reference(dsl::parse(corpus_text("composite_color")), path_graph(4)), LowerError);
}

TEST(Lowering, RejectsCollectivesInRankLocalRegions) {
  EXPECT_THROW(compile("propNodes<int> x = 0; forall v in g.nodes() { g.sync_reduction(); }"), LowerError);
  EXPECT_THROW(compile("propNodes<int> x = 0; forall v in g.nodes() { bool f = g.all_finished(true); }"), LowerError);
}

TEST(Lowering, RejectsConflictingOperators) {
  EXPECT_THROW(compile("propNodes<int> x = 0;\n"
                       "forall v in g.nodes() { <v.x> = <Sum(v.x, 1)>; }\n"
                       "forall v in g.nodes() { <v.x> = <Min(v.x, 1)>; }\n"),
               LowerError);
}

TEST(Execute, SsspOnAPath) {
  auto g = path_graph(12, 2);
  auto plan = compile(programs::kSssp, "all");
  for (int r : {1, 3, 4}) {
    auto res = run(plan, g, r, 0);
    for (VertexId v = 0; v < 12; ++v) EXPECT_EQ(res.props.at("dist")[v], static_cast<Value>(2 * v));
  }
  auto from5 = run(plan, g, 2, 5);
  EXPECT_EQ(from5.props.at("dist")[4], kInf);
  EXPECT_EQ(from5.props.at("dist")[11], 12);
}

TEST(Execute, SsspUnreachableStaysInfinite) {
  auto g = from_edges(10, {{0, 1, 5}, {2, 3, 1}});
  for (const auto* ps : {"none", "all"}) {
    auto res = run(compile(programs::kSssp, ps), g, 2);
    EXPECT_EQ(res.props.at("dist"), ts::shortest_paths(g, 0)) << ps;
    EXPECT_EQ(res.props.at("dist")[9], kInf);
  }
}

TEST(Execute, SaturatesNearInfinity) {
  auto g = from_edges(8, {{0, 1, kInf - 1}, {1, 2, 7}});
  auto res = run(compile(programs::kSssp, "all"), g, 2);
  EXPECT_EQ(res.props.at("dist")[1], kInf - 1);
  EXPECT_EQ(res.props.at("dist")[2], kInf);
  EXPECT_EQ(res.props.at("dist"), ts::shortest_paths(g, 0));
}

TEST(Execute, DegreeCountsAndWeightedDegree) {
  auto g = uniform_random(200, 1200, 9);
  for (int r : {1, 4, 8}) {
    EXPECT_EQ(run(compile(programs::kDegree, "all"), g, r).props.at("deg"), ts::count_in_edges(g));
    EXPECT_EQ(run(compile(corpus_text("weighted_degree"), "all"), g, r).props.at("wdeg"), ts::weighted_in(g));
  }
}

TEST(Execute, ConnectedComponentsOnTriangles) {
  auto g = ts::disjoint_triangles(3);
  auto res = run(compile(programs::kCc, "all"), g, 3);
  EXPECT_EQ(res.props.at("comp"), (std::vector<Value>{0, 0, 0, 3, 3, 3, 6, 6, 6}));
}

TEST(Execute, BoundedRoundsSeeSnapshots) {
  auto g = rmat(7, 4, 5);
  auto want = max_label_rounds(g, 3);
  for (unsigned mask : {0u, 15u})
    for (int r : {1, 4}) {
      auto plan = engine::lower(optimize(dsl::parse(corpus_text("max_label")), PassSet::from_mask(mask)).program);
      EXPECT_EQ(run(plan, g, r).props.at("label"), want) << "mask " << mask << " R " << r;
    }
}

TEST(Execute, PullSumsNeighborIds) {
  auto g = uniform_random(60, 300, 2);
  std::vector<Value> want(g.n, 0);
  for (VertexId v = 0; v < g.n; ++v)
    for (VertexId u : g.neighbors(v)) want[v] += 1 + static_cast<Value>(u);
  for (const auto* ps : {"none", "all", "cache"}) {
    auto res = run(compile(corpus_text("neighbor_pull"), ps), g, 4);
    EXPECT_EQ(res.props.at("a"), want) << ps;
  }
}

TEST(Execute, MatchesReferenceOnCorpus) {
  auto g = uniform_random(120, 700, 21);
  auto gs = from_edges(g.n, g.edges(), true);
  for (const auto& name : ts::corpus_names()) {
    auto prog = dsl::parse(corpus_text(name));
    const auto& graph = name == "cc" ? gs : g;
    auto ref = engine::execute_reference(prog, graph, 3);
    for (unsigned mask = 0; mask < 16; ++mask) {
      auto plan = engine::lower(optimize(prog, PassSet::from_mask(mask)).program);
      for (int r : {1, 2, 5}) EXPECT_EQ(run(plan, graph, r, 3).props, ref) << name << " mask " << mask << " R " << r;
    }
  }
}

TEST(Execute, PulsesCutSynchronizations) {
  auto g = uniform_random(400, 3000, 8);
  auto base = run(compile(programs::kSssp, "none"), g, 4);
  auto pulsed = run(compile(programs::kSssp, "pulses"), g, 4);
  EXPECT_EQ(base.props, pulsed.props);
  EXPECT_LE(pulsed.metrics.sync_rounds, base.metrics.sync_rounds);
  EXPECT_GT(base.metrics.allreduce_calls, 0u);
}

TEST(Execute, PulseGuardStopsRunawayLoops) {
  auto plan = compile("propNodes<int> x = 0;\nwhile (true) {\n  forall v in g.nodes() { <v.x> = <Sum(v.x, 1)>; }\n}\n");
  EXPECT_THROW(run(plan, path_graph(8), 2), NonTerminationError);
  auto spin = compile("int i = 0;\nwhile (i >= 0) {\n  i++;\n}\n");
  EXPECT_THROW(run(spin, path_graph(8), 2), NonTerminationError);
  auto sssp = compile(programs::kSssp);
  EXPECT_THROW(run(sssp, path_graph(50), 2, 0, 5), NonTerminationError);
  EXPECT_NO_THROW(run(sssp, path_graph(50), 2, 0, 50));
}

TEST(Execute, DivergentReplicatedConditionsDeadlock) {
  auto plan = compile("propNodes<int> x = 0;\nwhile (g.is_local(SOURCE)) {\n  forall v in g.nodes() { v.x = 1; }\n}\n");
  EXPECT_THROW(run(plan, path_graph(8), 2), DeadlockError);
  EXPECT_THROW(run(plan, path_graph(8), 1), NonTerminationError);
}

TEST(Execute, CollectiveLogsAgreeAcrossRanks) {
  auto g = uniform_random(100, 500, 4);
  PartitionedGraph pg(g, 4);
  runtime::WorldConfig c;
  c.world_size = 4;
  runtime::World w(pg, c);
  engine::execute(compile(programs::kSssp, "all"), pg, w);
  const auto& log = w.collective_log();
  for (const auto& l : log) EXPECT_EQ(l, log[0]);
  EXPECT_FALSE(log[0].empty());
}

TEST(Execute, RejectsBadSource) {
  EXPECT_THROW(run(compile(programs::kSssp), path_graph(8), 2, 8), BoundsError);
  EXPECT_THROW(engine::execute_reference(dsl::parse(programs::kSssp), path_graph(8), 8), BoundsError);
}

TEST(Execute, BypassReadsNeverTouchRemoteMemory) {
  auto g = rmat(8, 6, 3);
  auto res = run(compile(programs::kSssp, "bypass"), g, 4);
  EXPECT_EQ(res.metrics.remote_gets, 0u);
  EXPECT_GT(res.metrics.bypassed_gets, 0u);
  EXPECT_EQ(res.props.at("dist"), ts::shortest_paths(g, 0));
}
