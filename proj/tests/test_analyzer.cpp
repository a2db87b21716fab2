#include <gtest/gtest.h>

#include "pulse/analyzer.hpp"
#include "pulse/dsl/parser.hpp"
#include "pulse/programs.hpp"
#include "support/suite.hpp"

using namespace pulse;

namespace {

struct Analyzed {
  Program prog;
  AnalysisFacts facts;
};

Analyzed analyzed(const std::string& src) {
  Analyzed a{dsl::parse(src), {}};
  dsl::number_statements(a.prog);
  a.facts = analyze(a.prog);
  return a;
}

Analyzed corpus(const std::string& name) {
  return analyzed(testsupport::read_file(testsupport::data_path("corpus/" + name + ".sp")));
}

// First statement of the given kind in pre-order.
const Stmt& find(const Program& p, StmtKind k, int skip = 0) {
  const Stmt* hit = nullptr;
  dsl::for_each_stmt(p.body, [&](const Stmt& s) {
    if (!hit && s.kind == k && skip-- == 0) hit = &s;
  });
  if (!hit) throw std::runtime_error("statement not found");
  return *hit;
}

}  // namespace

TEST(ReductionExclusive, SsspLoopNest) {
  auto a = corpus("sssp");
  const auto& loop = find(a.prog, StmtKind::While);
  EXPECT_TRUE(a.facts.exclusive(loop));
  EXPECT_TRUE(a.facts.exclusive(find(a.prog, StmtKind::FrontierLoop)));
  EXPECT_TRUE(a.facts.exclusive(find(a.prog, StmtKind::ForAllNeighbors)));
  EXPECT_TRUE(a.facts.at(find(a.prog, StmtKind::Reduction)).in_exclusive_context);
  EXPECT_FALSE(a.facts.at(loop).in_exclusive_context);
  EXPECT_EQ(a.facts.at(loop).reductions, 1);
  // fixSource sits outside every exclusive statement
  EXPECT_FALSE(a.facts.at(find(a.prog, StmtKind::FixSource)).in_exclusive_context);
}

TEST(ReductionExclusive, TwoReductionsBreakExclusivity) {
  auto a = analyzed(
      "propNodes<int> x = 0; propNodes<int> y = 0;\n"
      "forall v in g.nodes() { forall nbr in g.neighbors(v) {\n"
      "  <nbr.x> = <Sum(nbr.x, 1)>;\n"
      "  <nbr.y> = <Sum(nbr.y, 1)>;\n"
      "} }\n");
  EXPECT_FALSE(a.facts.exclusive(find(a.prog, StmtKind::ForAllNodes)));
  EXPECT_EQ(a.facts.at(find(a.prog, StmtKind::ForAllNodes)).reductions, 2);
  EXPECT_TRUE(a.facts.exclusive(find(a.prog, StmtKind::Reduction)));
}

TEST(ReductionExclusive, OperandWrittenElsewhereBreaksExclusivity) {
  auto a = analyzed(
      "propNodes<int> x = 0; propNodes<int> b = 0;\n"
      "forall v in g.nodes() {\n"
      "  v.b = 3;\n"
      "  forall nbr in g.neighbors(v) { <nbr.x> = <Sum(nbr.x, v.b)>; }\n"
      "}\n");
  EXPECT_FALSE(a.facts.exclusive(find(a.prog, StmtKind::ForAllNodes)));
  EXPECT_TRUE(a.facts.exclusive(find(a.prog, StmtKind::ForAllNeighbors)));
}

TEST(ReductionExclusive, TargetWrittenElsewhereBreaksExclusivity) {
  auto a = analyzed(
      "propNodes<int> x = 0;\n"
      "forall v in g.nodes() {\n"
      "  v.x = 0;\n"
      "  forall nbr in g.neighbors(v) { <nbr.x> = <Min(nbr.x, 1)>; }\n"
      "}\n");
  EXPECT_FALSE(a.facts.exclusive(find(a.prog, StmtKind::ForAllNodes)));
}

TEST(ReductionExclusive, UnrelatedCounterDoesNotBreakIt) {
  auto a = corpus("max_label");
  const auto& loop = find(a.prog, StmtKind::While);
  EXPECT_TRUE(a.facts.exclusive(loop));
  EXPECT_FALSE(a.facts.at(find(a.prog, StmtKind::Increment)).reduction_exclusive);
}

TEST(CacheSafety, SsspOperandsButNotTheTarget) {
  auto a = corpus("sssp");
  const auto& inner = find(a.prog, StmtKind::ForAllNeighbors);
  EXPECT_TRUE(a.facts.cache_safe(inner, "v.dist"));
  EXPECT_TRUE(a.facts.cache_safe(inner, "e.weight"));
  EXPECT_FALSE(a.facts.cache_safe(inner, "nbr.dist"));
  EXPECT_FALSE(a.facts.at(inner).cache_safe_props.contains("dist"));
}

TEST(CacheSafety, SelfReadingCountHasNothingToCache) {
  auto a = corpus("neighbor_count");
  const auto& outer = find(a.prog, StmtKind::ForAllNodes);
  EXPECT_TRUE(a.facts.exclusive(outer));
  EXPECT_TRUE(a.facts.at(outer).cache_safe.empty());
}

TEST(CacheSafety, PullReadOfAnotherProperty) {
  auto a = corpus("neighbor_pull");
  const auto& pull = find(a.prog, StmtKind::ForAllNodes, 1);
  EXPECT_TRUE(a.facts.cache_safe(pull, "nbr.b"));
  EXPECT_TRUE(a.facts.at(pull).cache_safe_props.contains("b"));
  EXPECT_FALSE(a.facts.at(pull).cache_safe_props.contains("a"));
  // the initializing loop is not reduction-exclusive, so nothing in it is cache-safe
  EXPECT_TRUE(a.facts.at(find(a.prog, StmtKind::ForAllNodes, 0)).cache_safe.empty());
}

TEST(CacheSafety, NothingOutsideExclusiveStatements) {
  auto a = analyzed(
      "propNodes<int> x = 0; propNodes<int> y = 0;\n"
      "forall v in g.nodes() { forall nbr in g.neighbors(v) {\n"
      "  <nbr.x> = <Sum(nbr.x, v.y)>;\n"
      "  <nbr.y> = <Sum(nbr.y, v.x)>;\n"
      "} }\n");
  EXPECT_TRUE(a.facts.at(find(a.prog, StmtKind::ForAllNodes)).cache_safe.empty());
  EXPECT_TRUE(a.facts.at(find(a.prog, StmtKind::ForAllNeighbors)).cache_safe.empty());
}
