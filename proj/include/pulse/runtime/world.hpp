#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "pulse/graph.hpp"
#include "pulse/runtime/metrics.hpp"
#include "pulse/runtime/reduction_queue.hpp"

namespace pulse::runtime {

// Relative cost constants; only comparisons between runs are meaningful.
struct CostModel {
  std::uint64_t get_epoch = 10;      // lock + epoch open/close per get
  std::uint64_t per_byte = 1;
  std::uint64_t chunk_epoch = 10;    // per chunk written into the window
  std::uint64_t message_setup = 20;  // per point-to-point message (all-to-all)
};

enum class SyncMode { Bulk, Legacy };

inline constexpr std::size_t kDefaultBufferBytes = 28 * 1024;
inline constexpr std::size_t kValueBytes = 4;
inline constexpr std::size_t kPairBytes = 8;

struct WorldConfig {
  int world_size = 1;
  std::size_t buffersz_bytes = kDefaultBufferBytes;
  bool short_circuit = true;
  SyncMode sync_mode = SyncMode::Bulk;
  std::uint64_t seed = 0;
  std::uint64_t max_pulses = 0;  // 0: 4n
  CostModel cost;
};

using PropId = int;

enum class Combiner { And, Or };

// An R-rank world. Every rank owns a live array per property; remote readers
// see the owner's published copy, which only changes at pulse boundaries.
class World {
 public:
  World(const PartitionedGraph& g, WorldConfig cfg)
      : graph_(&g), cfg_(cfg), frontier_(static_cast<std::size_t>(g.world_size())),
        frontier_size_(static_cast<std::size_t>(g.world_size()), 0),
        pending_(static_cast<std::size_t>(g.world_size())),
        collective_log_(static_cast<std::size_t>(g.world_size())) {
    if (cfg_.world_size != g.world_size())
      throw ConfigError("world size " + std::to_string(cfg_.world_size) +
                        " does not match graph partition " + std::to_string(g.world_size()));
    if (cfg_.buffersz_bytes < kPairBytes * static_cast<std::size_t>(cfg_.world_size))
      throw ConfigError("buffersz_bytes too small for world size");
    for (Rank r = 0; r < size(); ++r)
      frontier_[r].assign(g.partition().size(r), 0);
  }

  int size() const { return graph_->world_size(); }
  const PartitionedGraph& graph() const { return *graph_; }
  const WorldConfig& config() const { return cfg_; }
  Metrics& metrics() { return metrics_; }
  const Metrics& metrics() const { return metrics_; }

  // Pairs per chunk: the buffer is split evenly across destinations.
  std::size_t chunk_capacity_pairs() const {
    return cfg_.buffersz_bytes / (static_cast<std::size_t>(size()) * kPairBytes);
  }

  // Properties -----------------------------------------------------------
  PropId add_property(const std::string& name, Value init) {
    if (find_property(name) >= 0) throw ConfigError("property '" + name + "' already exists");
    const auto& part = graph_->partition();
    props_.push_back({name, PropertyStore(name, part, init), PropertyStore(name, part, init), {}, {}});
    auto& p = props_.back();
    for (Rank r = 0; r < size(); ++r) {
      p.queues.emplace_back(size(), chunk_capacity_pairs());
      p.memo.emplace_back();
    }
    return static_cast<PropId>(props_.size() - 1);
  }

  PropId find_property(const std::string& name) const {
    for (std::size_t i = 0; i < props_.size(); ++i)
      if (props_[i].name == name) return static_cast<PropId>(i);
    return -1;
  }
  const std::string& property_name(PropId p) const { return props_.at(static_cast<std::size_t>(p)).name; }
  std::size_t property_count() const { return props_.size(); }

  // Sets a value outside any pulse (initialization); marks on change.
  void store(PropId p, VertexId v, Value val) {
    auto [r, l] = locate(v);
    auto& prop = props_.at(static_cast<std::size_t>(p));
    if (prop.live.per_rank[r][l] != val) frontier_mark(v);
    prop.live.per_rank[r][l] = val;
    prop.published.per_rank[r][l] = val;
  }

  // Emulated MPI_Get: reads the owner's published value.
  Value rma_get(PropId p, VertexId v, Rank caller) {
    auto [r, l] = locate(v);
    auto& prop = props_.at(static_cast<std::size_t>(p));
    if (r == caller) {
      ++metrics_.local_gets;
      ++current_.local_gets;
    } else {
      ++metrics_.remote_gets;
      ++current_.remote_gets;
      ++current_.remote_gets_by_prop[prop.name];
      if (touched_[prop.name].insert((std::uint64_t{static_cast<std::uint32_t>(caller)} << 32) | v).second)
        ++current_.distinct_remote_by_prop[prop.name];
    }
    metrics_.bytes_window_traffic += kValueBytes;
    current_.bytes_window_traffic += kValueBytes;
    metrics_.cost_units += cfg_.cost.get_epoch + kValueBytes * cfg_.cost.per_byte;
    return prop.published.per_rank[r][l];
  }

  // Direct dereference of the caller's own live memory.
  Value bypass_read(PropId p, VertexId v, Rank caller) {
    auto [r, l] = locate(v);
    require_owner(r, caller, v, "bypass read");
    ++metrics_.bypassed_gets;
    ++current_.bypassed_gets;
    return props_.at(static_cast<std::size_t>(p)).live.per_rank[r][l];
  }

  // Remote reads go through the caller's per-pulse memo.
  Value cached_get(PropId p, VertexId v, Rank caller) {
    if (graph_->owner(v) == caller) return rma_get(p, v, caller);
    auto& memo = props_.at(static_cast<std::size_t>(p)).memo[static_cast<std::size_t>(caller)];
    if (auto it = memo.find(v); it != memo.end()) {
      ++metrics_.cache_hits;
      ++current_.cache_hits;
      return it->second;
    }
    Value val = rma_get(p, v, caller);
    memo.emplace(v, val);
    return val;
  }

  void clear_cache(PropId p, Rank caller) {
    props_.at(static_cast<std::size_t>(p)).memo[static_cast<std::size_t>(caller)].clear();
  }

  void clear_caches() {
    for (auto& prop : props_)
      for (auto& m : prop.memo) m.clear();
  }

  // Plain write to an owned vertex.
  void write_local(PropId p, VertexId v, Rank caller, Value val) {
    auto [r, l] = locate(v);
    require_owner(r, caller, v, "property write");
    auto& slot = props_.at(static_cast<std::size_t>(p)).live.per_rank[r][l];
    if (slot != val) {
      slot = val;
      dirty_ = true;
      frontier_mark(v);
    }
  }

  // Reductions -------------------------------------------------------------
  void add_to_red(PropId p, Rank caller, VertexId idx, Value val) {
    auto dest = graph_->owner(idx);
    props_.at(static_cast<std::size_t>(p)).queues.at(static_cast<std::size_t>(caller)).add(dest, idx, val);
    ++metrics_.queued_updates;
    ++current_.queued_updates;
  }

  const ReductionQueue& queue(PropId p, Rank caller) const {
    return props_.at(static_cast<std::size_t>(p)).queues.at(static_cast<std::size_t>(caller));
  }

  // Folds an update to an owned vertex immediately. Only for monotonic ops,
  // and only when short-circuiting is enabled.
  bool short_circuit_local(PropId p, VertexId idx, Value val, ReductionOp op, Rank caller) {
    if (!cfg_.short_circuit || !is_monotonic(op)) return false;
    auto [r, l] = locate(idx);
    if (r != caller) return false;
    auto& slot = props_.at(static_cast<std::size_t>(p)).live.per_rank[r][l];
    Value next = apply(op, slot, val);
    if (next != slot) {
      slot = next;
      dirty_ = true;
      frontier_mark(idx);
    }
    ++metrics_.short_circuited_updates;
    ++current_.short_circuited_updates;
    return true;
  }

  // Chunked window transfer: every source writes one chunk per destination
  // into that destination's window segment, and the destination folds it.
  // Rounds repeat until every chain is drained.
  void bulk_synchronize(PropId p, ReductionOp op) {
    enter_collective("sync:" + property_name(p));
    bulk_transfer(p, op);
    finish_sync();
  }

  // Dense all-to-all baseline: every ordered rank pair exchanges a message,
  // empty or not. Self-destined updates never leave the rank.
  void legacy_all_to_all_sync(PropId p, ReductionOp op) {
    enter_collective("sync:" + property_name(p));
    legacy_transfer(p, op);
    finish_sync();
  }

  void synchronize(PropId p, ReductionOp op) {
    if (cfg_.sync_mode == SyncMode::Bulk)
      bulk_synchronize(p, op);
    else
      legacy_all_to_all_sync(p, op);
  }

  // One pulse boundary covering several reduced properties.
  void sync_reduction(const std::vector<std::pair<PropId, ReductionOp>>& props) {
    enter_collective("sync");
    for (auto [p, op] : props) {
      if (cfg_.sync_mode == SyncMode::Bulk)
        bulk_transfer(p, op);
      else
        legacy_transfer(p, op);
    }
    finish_sync();
  }

  bool queues_empty() const {
    for (const auto& prop : props_)
      for (const auto& q : prop.queues)
        if (q.total_pairs() != 0) return false;
    return true;
  }

  // Frontier ------------------------------------------------------------------
  void frontier_mark(VertexId v) {
    auto [r, l] = locate(v);
    auto& bit = frontier_[static_cast<std::size_t>(r)][l];
    if (!bit) {
      bit = 1;
      ++frontier_size_[static_cast<std::size_t>(r)];
    }
  }

  bool frontier_nonempty(Rank r) const { return frontier_size_.at(static_cast<std::size_t>(r)) > 0; }

  // Ascending global ids; empties the rank's frontier.
  std::vector<VertexId> frontier_drain(Rank r) {
    std::vector<VertexId> out;
    auto& bits = frontier_[static_cast<std::size_t>(r)];
    out.reserve(frontier_size_[static_cast<std::size_t>(r)]);
    const VertexId base = graph_->partition().begin(r);
    for (std::size_t l = 0; l < bits.size(); ++l)
      if (bits[l]) {
        out.push_back(base + static_cast<VertexId>(l));
        bits[l] = 0;
      }
    frontier_size_[static_cast<std::size_t>(r)] = 0;
    return out;
  }

  // Collectives -------------------------------------------------------------
  bool combine_termination_flag(const std::vector<bool>& flags, Combiner how) {
    if (flags.size() != static_cast<std::size_t>(size()))
      throw DeadlockError("flag combine: " + std::to_string(flags.size()) + " of " +
                          std::to_string(size()) + " ranks contributed");
    enter_collective(how == Combiner::And ? "allreduce:and" : "allreduce:or");
    ++metrics_.allreduce_calls;
    bool out = how == Combiner::And;
    for (bool f : flags) out = how == Combiner::And ? (out && f) : (out || f);
    return out;
  }

  // A rank announces it reached a collective. If any rank has announced,
  // the collective only proceeds when all have, with the same tag.
  void arrive(Rank r, const std::string& tag) { pending_.at(static_cast<std::size_t>(r)).push_back(tag); }

  const std::vector<std::vector<std::string>>& collective_log() const { return collective_log_; }

  // Copies every live array to its published copy.
  void publish() {
    if (!dirty_) return;
    for (auto& prop : props_) prop.published = prop.live;
    dirty_ = false;
  }

  std::vector<Value> gather(PropId p) const { return props_.at(static_cast<std::size_t>(p)).live.gather(); }
  std::vector<Value> gather_published(PropId p) const {
    return props_.at(static_cast<std::size_t>(p)).published.gather();
  }

  // Closes the current pulse's per-pulse record.
  void end_pulse() {
    current_.pulse = metrics_.pulses.size();
    metrics_.pulses.push_back(std::move(current_));
    current_ = PulseStats{};
    touched_.clear();
  }

  // Flushes trailing activity after the last synchronization.
  void finish_run() {
    bool active = current_.remote_gets || current_.local_gets || current_.bypassed_gets ||
                  current_.queued_updates || current_.short_circuited_updates || current_.cache_hits;
    if (active) end_pulse();
  }

 private:
  struct Prop {
    std::string name;
    PropertyStore live;
    PropertyStore published;
    std::vector<ReductionQueue> queues;  // per source rank
    std::vector<std::unordered_map<VertexId, Value>> memo;  // per rank
  };

  std::pair<Rank, VertexId> locate(VertexId v) const {
    if (v >= graph_->n()) throw BoundsError("vertex " + std::to_string(v) + " out of range");
    Rank r = graph_->owner(v);
    return {r, v - graph_->partition().begin(r)};
  }

  static void require_owner(Rank owner, Rank caller, VertexId v, const char* what) {
    if (owner != caller)
      throw AccessViolation(std::string(what) + " of vertex " + std::to_string(v) + " by rank " +
                            std::to_string(caller) + " (owner " + std::to_string(owner) + ")");
  }

  void fold_segment(Prop& prop, Rank dest, std::span<const ReductionQueue::Slot> seg, ReductionOp op) {
    const VertexId base = graph_->partition().begin(dest);
    auto& arr = prop.live.per_rank[static_cast<std::size_t>(dest)];
    for (std::size_t i = 0; i < seg.size() / 2; ++i) {
      VertexId idx = ReductionQueue::index_of(seg, i);
      Value val = ReductionQueue::value_of(seg, i);
      if (graph_->owner(idx) != dest) throw AccessViolation("update routed to the wrong rank");
      auto& slot = arr[idx - base];
      Value next = apply(op, slot, val);
      if (next != slot) {
        slot = next;
        dirty_ = true;
        frontier_mark(idx);
      }
      ++metrics_.applied_updates;
    }
  }

  void bulk_transfer(PropId p, ReductionOp op) {
    auto& prop = props_.at(static_cast<std::size_t>(p));
    const std::size_t seg_slots = chunk_capacity_pairs() * 2;
    window_.assign(seg_slots * static_cast<std::size_t>(size()), 0);
    std::vector<std::size_t> cursor(static_cast<std::size_t>(size() * size()), 0);
    // One passive-target epoch per rank.
    metrics_.messages += static_cast<std::uint64_t>(size());
    current_.messages += static_cast<std::uint64_t>(size());
    bool remaining = true;
    while (remaining) {
      remaining = false;
      bool moved = false;
      for (Rank src = 0; src < size(); ++src) {
        const auto& q = prop.queues[static_cast<std::size_t>(src)];
        for (Rank dest = 0; dest < size(); ++dest) {
          auto& c = cursor[static_cast<std::size_t>(src * size() + dest)];
          if (c >= q.chunk_count(dest)) continue;
          auto chunk = q.chunk(dest, c++);
          auto segment = std::span<ReductionQueue::Slot>(window_).subspan(
              static_cast<std::size_t>(dest) * seg_slots, seg_slots);
          std::copy(chunk.begin(), chunk.end(), segment.begin());
          fold_segment(prop, dest, segment.first(chunk.size()), op);
          metrics_.bytes_window_traffic += chunk.size() * kValueBytes;
          current_.bytes_window_traffic += chunk.size() * kValueBytes;
          metrics_.cost_units += cfg_.cost.chunk_epoch + chunk.size() * kValueBytes * cfg_.cost.per_byte;
          moved = true;
          if (c < q.chunk_count(dest)) remaining = true;
        }
      }
      if (moved) ++metrics_.chunk_rounds;
    }
    for (auto& q : prop.queues) q.clear();
  }

  void legacy_transfer(PropId p, ReductionOp op) {
    auto& prop = props_.at(static_cast<std::size_t>(p));
    const auto pair_msgs = static_cast<std::uint64_t>(size()) * static_cast<std::uint64_t>(size() - 1);
    metrics_.messages += pair_msgs;
    current_.messages += pair_msgs;
    metrics_.cost_units += pair_msgs * cfg_.cost.message_setup;
    for (Rank src = 0; src < size(); ++src) {
      const auto& q = prop.queues[static_cast<std::size_t>(src)];
      for (Rank dest = 0; dest < size(); ++dest) {
        for (std::size_t c = 0; c < q.chunk_count(dest); ++c) {
          auto chunk = q.chunk(dest, c);
          fold_segment(prop, dest, chunk, op);
          if (src != dest) {
            metrics_.bytes_window_traffic += chunk.size() * kValueBytes;
            current_.bytes_window_traffic += chunk.size() * kValueBytes;
            metrics_.cost_units += chunk.size() * kValueBytes * cfg_.cost.per_byte;
          }
        }
      }
    }
    for (auto& q : prop.queues) q.clear();
  }

  void finish_sync() {
    publish();
    clear_caches();
    ++metrics_.sync_rounds;
    end_pulse();
  }

  void enter_collective(const std::string& tag) {
    bool any = std::any_of(pending_.begin(), pending_.end(), [](const auto& q) { return !q.empty(); });
    if (any) {
      std::string missing;
      for (Rank r = 0; r < size(); ++r) {
        auto& q = pending_[static_cast<std::size_t>(r)];
        if (q.empty() || q.front() != tag)
          missing += " rank " + std::to_string(r) + (q.empty() ? " (absent)" : " (at " + q.front() + ")");
      }
      if (!missing.empty()) throw DeadlockError("collective '" + tag + "' diverged:" + missing);
      for (auto& q : pending_) q.erase(q.begin());
    }
    for (auto& log : collective_log_) log.push_back(tag);
  }

  const PartitionedGraph* graph_;
  WorldConfig cfg_;
  Metrics metrics_;
  PulseStats current_;
  std::unordered_map<std::string, std::unordered_set<std::uint64_t>> touched_;
  std::vector<Prop> props_;
  std::vector<ReductionQueue::Slot> window_;
  bool dirty_ = false;  // live differs from published somewhere
  std::vector<std::vector<char>> frontier_;
  std::vector<std::size_t> frontier_size_;
  std::vector<std::vector<std::string>> pending_;
  std::vector<std::vector<std::string>> collective_log_;
};

}  // namespace pulse::runtime
