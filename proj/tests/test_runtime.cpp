#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "pulse/runtime/world.hpp"
#include "support/oracles.hpp"

using namespace pulse;
using namespace pulse::runtime;

namespace {

WorldConfig cfg(int r, std::size_t buf = kDefaultBufferBytes) {
  WorldConfig c;
  c.world_size = r;
  c.buffersz_bytes = buf;
  return c;
}

struct Fixture {
  GlobalGraph g;
  PartitionedGraph pg;
  World world;
  Fixture(VertexId n, int r, std::size_t buf = kDefaultBufferBytes, SyncMode mode = SyncMode::Bulk)
      : g(from_edges(n, {})), pg(g, r), world(pg, [&] {
          auto c = cfg(r, buf);
          c.sync_mode = mode;
          return c;
        }()) {}
};

}  // namespace

TEST(ReductionQueue, FixedChunksPerDestination) {
  ReductionQueue q(3, 2);
  for (VertexId i = 0; i < 5; ++i) q.add(1, i, -static_cast<Value>(i));
  q.add(2, 9, kInf);
  EXPECT_EQ(q.chunk_count(0), 0u);
  EXPECT_EQ(q.chunk_count(1), 3u);
  EXPECT_EQ(q.pairs(1), 5u);
  EXPECT_EQ(q.chunk(1, 0).size(), 4u);
  EXPECT_EQ(q.chunk(1, 2).size(), 2u);
  EXPECT_EQ(ReductionQueue::index_of(q.chunk(1, 1), 1), 3u);
  EXPECT_EQ(ReductionQueue::value_of(q.chunk(1, 1), 1), -3);
  EXPECT_EQ(ReductionQueue::value_of(q.chunk(2, 0), 0), kInf);
  EXPECT_EQ(q.total_pairs(), 6u);
  q.clear();
  EXPECT_EQ(q.total_pairs(), 0u);
  EXPECT_THROW(ReductionQueue(2, 0), ConfigError);
}

TEST(World, ChunkCapacityAndConfigChecks) {
  Fixture f(16, 4, 320);
  EXPECT_EQ(f.world.chunk_capacity_pairs(), 10u);
  auto g = from_edges(16, {});
  PartitionedGraph pg(g, 4);
  EXPECT_THROW(World(pg, cfg(3)), ConfigError);
  EXPECT_THROW(World(pg, cfg(4, 16)), ConfigError);
}

TEST(World, PropertiesAreUniqueByName) {
  Fixture f(8, 2);
  auto p = f.world.add_property("x", 3);
  EXPECT_EQ(f.world.find_property("x"), p);
  EXPECT_EQ(f.world.find_property("y"), -1);
  EXPECT_THROW(f.world.add_property("x", 0), ConfigError);
  EXPECT_EQ(f.world.gather(p), std::vector<Value>(8, 3));
}

TEST(World, RemoteReadsSeeThePublishedCopy) {
  Fixture f(8, 2);
  auto p = f.world.add_property("x", 0);
  f.world.write_local(p, 6, 1, 42);
  EXPECT_EQ(f.world.rma_get(p, 6, 0), 0);
  EXPECT_EQ(f.world.bypass_read(p, 6, 1), 42);
  f.world.publish();
  EXPECT_EQ(f.world.rma_get(p, 6, 0), 42);
  EXPECT_EQ(f.world.metrics().remote_gets, 2u);
  EXPECT_EQ(f.world.metrics().bypassed_gets, 1u);
  EXPECT_EQ(f.world.rma_get(p, 6, 1), 42);
  EXPECT_EQ(f.world.metrics().local_gets, 1u);
}

TEST(World, OwnershipIsEnforced) {
  Fixture f(8, 2);
  auto p = f.world.add_property("x", 0);
  EXPECT_THROW(f.world.write_local(p, 6, 0, 1), AccessViolation);
  EXPECT_THROW(f.world.bypass_read(p, 1, 1), AccessViolation);
  EXPECT_THROW(f.world.rma_get(p, 8, 0), BoundsError);
}

TEST(World, WritesMarkTheFrontierOnlyOnChange) {
  Fixture f(8, 2);
  auto p = f.world.add_property("x", 5);
  f.world.write_local(p, 1, 0, 5);
  EXPECT_FALSE(f.world.frontier_nonempty(0));
  f.world.write_local(p, 3, 0, 6);
  f.world.write_local(p, 1, 0, 7);
  EXPECT_TRUE(f.world.frontier_nonempty(0));
  EXPECT_FALSE(f.world.frontier_nonempty(1));
  EXPECT_EQ(f.world.frontier_drain(0), (std::vector<VertexId>{1, 3}));
  EXPECT_FALSE(f.world.frontier_nonempty(0));
}

TEST(World, CacheMemoizesRemoteReadsUntilSync) {
  Fixture f(8, 2);
  auto p = f.world.add_property("x", 1);
  EXPECT_EQ(f.world.cached_get(p, 5, 0), 1);
  EXPECT_EQ(f.world.cached_get(p, 5, 0), 1);
  EXPECT_EQ(f.world.cached_get(p, 2, 0), 1);  // owned: plain local get
  EXPECT_EQ(f.world.metrics().remote_gets, 1u);
  EXPECT_EQ(f.world.metrics().cache_hits, 1u);
  f.world.add_to_red(p, 1, 5, 9);
  f.world.sync_reduction({{p, ReductionOp::Sum}});
  EXPECT_EQ(f.world.cached_get(p, 5, 0), 10);
  EXPECT_EQ(f.world.metrics().remote_gets, 2u);
  ASSERT_GE(f.world.metrics().pulses.size(), 1u);
  EXPECT_EQ(f.world.metrics().pulses[0].remote_gets_by_prop.at("x"), 1u);
  EXPECT_EQ(f.world.metrics().pulses[0].distinct_remote_by_prop.at("x"), 1u);
}

TEST(World, DistinctRemoteReadsPerPulse) {
  Fixture f(8, 2);
  auto p = f.world.add_property("x", 0);
  for (int i = 0; i < 3; ++i) f.world.rma_get(p, 6, 0);
  f.world.rma_get(p, 2, 1);
  f.world.rma_get(p, 7, 0);
  f.world.end_pulse();
  const auto& pulse = f.world.metrics().pulses.at(0);
  EXPECT_EQ(pulse.remote_gets_by_prop.at("x"), 5u);
  EXPECT_EQ(pulse.distinct_remote_by_prop.at("x"), 3u);
}

TEST(World, ShortCircuitOnlyForOwnedMonotonicUpdates) {
  Fixture f(8, 2);
  auto p = f.world.add_property("x", 10);
  EXPECT_TRUE(f.world.short_circuit_local(p, 2, 4, ReductionOp::Min, 0));
  EXPECT_FALSE(f.world.short_circuit_local(p, 6, 4, ReductionOp::Min, 0));
  EXPECT_FALSE(f.world.short_circuit_local(p, 2, 4, ReductionOp::Sum, 0));
  EXPECT_EQ(f.world.gather(p)[2], 4);
  EXPECT_TRUE(f.world.frontier_nonempty(0));

  auto g = from_edges(8, {});
  PartitionedGraph pg(g, 2);
  auto c = cfg(2);
  c.short_circuit = false;
  World off(pg, c);
  auto q = off.add_property("x", 10);
  EXPECT_FALSE(off.short_circuit_local(q, 2, 4, ReductionOp::Min, 0));
}

TEST(Sync, BulkAndLegacyAgreeAndCountMessages) {
  constexpr int kR = 4;
  std::mt19937_64 rng(3);
  std::vector<std::tuple<Rank, VertexId, Value>> updates;
  for (int i = 0; i < 3000; ++i)
    updates.emplace_back(static_cast<Rank>(rng() % kR), static_cast<VertexId>(rng() % 64),
                         static_cast<Value>(rng() % 200) - 100);
  std::vector<Value> results[2];
  for (int mode = 0; mode < 2; ++mode) {
    Fixture f(64, kR, 8 * kR * 5, mode == 0 ? SyncMode::Bulk : SyncMode::Legacy);
    auto p = f.world.add_property("x", 0);
    for (auto [r, v, val] : updates) f.world.add_to_red(p, r, v, val);
    f.world.synchronize(p, ReductionOp::Sum);
    EXPECT_TRUE(f.world.queues_empty());
    EXPECT_EQ(f.world.metrics().queued_updates, updates.size());
    EXPECT_EQ(f.world.metrics().applied_updates, updates.size());
    EXPECT_EQ(f.world.metrics().sync_rounds, 1u);
    EXPECT_EQ(f.world.metrics().messages, mode == 0 ? std::uint64_t{kR} : std::uint64_t{kR * (kR - 1)});
    if (mode == 0) {
      EXPECT_GT(f.world.metrics().chunk_rounds, 1u);
    }
    results[mode] = f.world.gather(p);
  }
  EXPECT_EQ(results[0], results[1]);
  std::vector<Value> want(64, 0);
  for (auto [r, v, val] : updates) want[v] = testsupport::sat_add(want[v], val);
  EXPECT_EQ(results[0], want);
}

TEST(Sync, OneBoundaryCoversEveryReducedProperty) {
  Fixture f(16, 4);
  auto a = f.world.add_property("a", kInf);
  auto b = f.world.add_property("b", 0);
  f.world.add_to_red(a, 0, 15, 3);
  f.world.add_to_red(a, 2, 15, 1);
  f.world.add_to_red(b, 3, 0, 5);
  f.world.add_to_red(b, 1, 0, 5);
  f.world.sync_reduction({{a, ReductionOp::Min}, {b, ReductionOp::Sum}});
  EXPECT_EQ(f.world.gather(a)[15], 1);
  EXPECT_EQ(f.world.gather(b)[0], 10);
  EXPECT_EQ(f.world.gather_published(b)[0], 10);
  EXPECT_EQ(f.world.metrics().sync_rounds, 1u);
  EXPECT_EQ(f.world.metrics().messages, 8u);
  EXPECT_EQ(f.world.metrics().pulses.size(), 1u);
}

TEST(Sync, PermutationsFoldIdentically) {
  constexpr int kR = 3;
  std::mt19937_64 rng(17);
  for (auto op : {ReductionOp::Min, ReductionOp::Max, ReductionOp::Sum}) {
    std::vector<std::tuple<Rank, VertexId, Value>> updates;
    for (int i = 0; i < 1000; ++i)
      updates.emplace_back(static_cast<Rank>(rng() % kR), static_cast<VertexId>(rng() % 30),
                           static_cast<Value>(rng() % 2001) - 1000);
    std::vector<Value> first;
    for (int perm = 0; perm < 10; ++perm) {
      std::shuffle(updates.begin(), updates.end(), rng);
      Fixture f(30, kR, 8 * kR * 3);
      auto p = f.world.add_property("x", 0);
      for (auto [r, v, val] : updates) f.world.add_to_red(p, r, v, val);
      f.world.bulk_synchronize(p, op);
      auto got = f.world.gather(p);
      if (perm == 0) first = got;
      EXPECT_EQ(got, first) << to_string(op);
    }
  }
}

TEST(Sync, ChangedTargetsJoinTheFrontier) {
  Fixture f(8, 2);
  auto p = f.world.add_property("x", 5);
  f.world.add_to_red(p, 0, 6, 9);  // no improvement under Min
  f.world.add_to_red(p, 0, 7, 2);
  f.world.bulk_synchronize(p, ReductionOp::Min);
  EXPECT_EQ(f.world.frontier_drain(1), (std::vector<VertexId>{7}));
}

TEST(Collectives, FlagCombineAndOr) {
  Fixture f(8, 2);
  EXPECT_TRUE(f.world.combine_termination_flag({true, true}, Combiner::And));
  EXPECT_FALSE(f.world.combine_termination_flag({true, false}, Combiner::And));
  EXPECT_TRUE(f.world.combine_termination_flag({false, true}, Combiner::Or));
  EXPECT_EQ(f.world.metrics().allreduce_calls, 3u);
  EXPECT_THROW(f.world.combine_termination_flag({true}, Combiner::And), DeadlockError);
}

TEST(Collectives, EveryRankLogsTheSameSequence) {
  Fixture f(8, 4);
  auto p = f.world.add_property("x", 0);
  f.world.synchronize(p, ReductionOp::Sum);
  f.world.combine_termination_flag({true, true, true, true}, Combiner::And);
  const auto& log = f.world.collective_log();
  ASSERT_EQ(log.size(), 4u);
  for (const auto& l : log) EXPECT_EQ(l, (std::vector<std::string>{"sync:x", "allreduce:and"}));
}

TEST(Collectives, DivergentArrivalsDeadlock) {
  Fixture f(8, 2);
  auto p = f.world.add_property("x", 0);
  f.world.arrive(0, "sync:x");
  EXPECT_THROW(f.world.synchronize(p, ReductionOp::Sum), DeadlockError);

  Fixture g(8, 2);
  auto q = g.world.add_property("x", 0);
  g.world.arrive(0, "sync:x");
  g.world.arrive(1, "allreduce:and");
  EXPECT_THROW(g.world.synchronize(q, ReductionOp::Sum), DeadlockError);

  Fixture h(8, 2);
  auto s = h.world.add_property("x", 0);
  h.world.arrive(0, "sync:x");
  h.world.arrive(1, "sync:x");
  EXPECT_NO_THROW(h.world.synchronize(s, ReductionOp::Sum));
}
