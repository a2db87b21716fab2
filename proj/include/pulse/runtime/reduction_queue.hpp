#pragma once

#include <bit>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "pulse/types.hpp"

namespace pulse::runtime {

// Per-destination chains of fixed-capacity chunks. Each chunk is a flat
// array of slots holding (global index, value) pairs in adjacent slots.
// Chunks never grow: when one fills, a new one is appended to the chain.
class ReductionQueue {
 public:
  using Slot = std::uint32_t;

  ReductionQueue(int world_size, std::size_t chunk_capacity_pairs)
      : capacity_pairs_(chunk_capacity_pairs), chains_(static_cast<std::size_t>(world_size)) {
    if (chunk_capacity_pairs == 0) throw ConfigError("reduction queue chunk capacity must be > 0");
  }

  void add(Rank dest, VertexId idx, Value val) {
    auto& chain = chains_.at(static_cast<std::size_t>(dest));
    if (chain.chunks.empty() || chain.slot_cursor == capacity_slots()) {
      chain.chunks.push_back(std::make_unique<Slot[]>(capacity_slots()));
      chain.slot_cursor = 0;
    }
    Slot* chunk = chain.chunks.back().get();
    chunk[chain.slot_cursor++] = idx;
    chunk[chain.slot_cursor++] = std::bit_cast<Slot>(val);
    ++chain.pairs;
  }

  std::size_t capacity_pairs() const { return capacity_pairs_; }
  std::size_t capacity_slots() const { return capacity_pairs_ * 2; }
  int world_size() const { return static_cast<int>(chains_.size()); }

  std::size_t chunk_count(Rank dest) const { return chains_.at(static_cast<std::size_t>(dest)).chunks.size(); }
  std::size_t pairs(Rank dest) const { return chains_.at(static_cast<std::size_t>(dest)).pairs; }

  std::size_t total_pairs() const {
    std::size_t n = 0;
    for (const auto& c : chains_) n += c.pairs;
    return n;
  }

  // Used slots of chunk i for dest; all but the last chunk are full.
  std::span<const Slot> chunk(Rank dest, std::size_t i) const {
    const auto& chain = chains_.at(static_cast<std::size_t>(dest));
    std::size_t used = i + 1 == chain.chunks.size() ? chain.slot_cursor : capacity_slots();
    return {chain.chunks.at(i).get(), used};
  }

  void clear() {
    for (auto& c : chains_) c = Chain{};
  }

  static VertexId index_of(std::span<const Slot> chunk, std::size_t pair) { return chunk[2 * pair]; }
  static Value value_of(std::span<const Slot> chunk, std::size_t pair) {
    return std::bit_cast<Value>(chunk[2 * pair + 1]);
  }

 private:
  struct Chain {
    std::vector<std::unique_ptr<Slot[]>> chunks;
    std::size_t slot_cursor = 0;
    std::size_t pairs = 0;
  };

  std::size_t capacity_pairs_;
  std::vector<Chain> chains_;
};

}  // namespace pulse::runtime
