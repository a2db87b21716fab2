#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace pulse::runtime {

struct PulseStats {
  std::uint64_t pulse = 0;
  std::uint64_t remote_gets = 0;
  std::uint64_t local_gets = 0;
  std::uint64_t bypassed_gets = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t queued_updates = 0;
  std::uint64_t short_circuited_updates = 0;
  std::uint64_t messages = 0;
  std::uint64_t bytes_window_traffic = 0;
  std::map<std::string, std::uint64_t> remote_gets_by_prop;
  // Distinct (caller rank, remote vertex) pairs read per property.
  std::map<std::string, std::uint64_t> distinct_remote_by_prop;
};

// Monotone counters for one run.
struct Metrics {
  std::uint64_t remote_gets = 0;
  std::uint64_t local_gets = 0;
  std::uint64_t bypassed_gets = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t edge_search_steps = 0;
  std::uint64_t queued_updates = 0;
  std::uint64_t applied_updates = 0;
  std::uint64_t short_circuited_updates = 0;
  std::uint64_t sync_rounds = 0;
  std::uint64_t chunk_rounds = 0;
  std::uint64_t messages = 0;
  std::uint64_t bytes_window_traffic = 0;
  std::uint64_t allreduce_calls = 0;
  std::uint64_t cost_units = 0;
  std::vector<PulseStats> pulses;
};

inline nlohmann::ordered_json to_json(const PulseStats& p) {
  nlohmann::ordered_json j;
  j["pulse"] = p.pulse;
  j["remote_gets"] = p.remote_gets;
  j["local_gets"] = p.local_gets;
  j["bypassed_gets"] = p.bypassed_gets;
  j["cache_hits"] = p.cache_hits;
  j["queued_updates"] = p.queued_updates;
  j["short_circuited_updates"] = p.short_circuited_updates;
  j["messages"] = p.messages;
  j["bytes_window_traffic"] = p.bytes_window_traffic;
  j["remote_gets_by_prop"] = p.remote_gets_by_prop;
  j["distinct_remote_by_prop"] = p.distinct_remote_by_prop;
  return j;
}

inline nlohmann::ordered_json to_json(const Metrics& m, bool with_pulses = true) {
  nlohmann::ordered_json j;
  j["remote_gets"] = m.remote_gets;
  j["local_gets"] = m.local_gets;
  j["bypassed_gets"] = m.bypassed_gets;
  j["cache_hits"] = m.cache_hits;
  j["edge_search_steps"] = m.edge_search_steps;
  j["queued_updates"] = m.queued_updates;
  j["applied_updates"] = m.applied_updates;
  j["short_circuited_updates"] = m.short_circuited_updates;
  j["sync_rounds"] = m.sync_rounds;
  j["chunk_rounds"] = m.chunk_rounds;
  j["messages"] = m.messages;
  j["bytes_window_traffic"] = m.bytes_window_traffic;
  j["allreduce_calls"] = m.allreduce_calls;
  j["cost_units"] = m.cost_units;
  if (with_pulses) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& p : m.pulses) arr.push_back(to_json(p));
    j["pulses"] = std::move(arr);
  }
  return j;
}

}  // namespace pulse::runtime
