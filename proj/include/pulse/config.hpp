#pragma once

#include <istream>
#include <map>
#include <string>

#include "pulse/passes.hpp"
#include "pulse/runtime/world.hpp"

namespace pulse {

struct RunConfig {
  runtime::WorldConfig world;
  PassSet passes = PassSet::all();
  VertexId source = 0;
};

namespace detail {

inline std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::uint64_t config_u64(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(v, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != v.size() || v.empty() || v[0] == '-')
    throw ConfigError("config key '" + key + "' expects a non-negative integer, got '" + v + "'");
  return out;
}

inline bool config_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "' expects true or false, got '" + v + "'");
}

}  // namespace detail

// Applies one key=value setting.
inline void apply_setting(RunConfig& cfg, const std::string& key, std::string value) {
  using detail::config_bool;
  using detail::config_u64;
  if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
  auto& w = cfg.world;
  if (key == "world_size") {
    auto r = config_u64(key, value);
    if (r == 0 || r > 1024) throw ConfigError("world_size must be in [1, 1024]");
    w.world_size = static_cast<int>(r);
  } else if (key == "buffersz_bytes") {
    w.buffersz_bytes = config_u64(key, value);
  } else if (key == "passes") {
    cfg.passes = parse_pass_set(value);
  } else if (key == "seed") {
    w.seed = config_u64(key, value);
  } else if (key == "source") {
    cfg.source = static_cast<VertexId>(config_u64(key, value));
  } else if (key == "short_circuit") {
    w.short_circuit = config_bool(key, value);
  } else if (key == "sync_mode") {
    if (value == "bulk") w.sync_mode = runtime::SyncMode::Bulk;
    else if (value == "legacy") w.sync_mode = runtime::SyncMode::Legacy;
    else throw ConfigError("sync_mode must be 'bulk' or 'legacy'");
  } else if (key == "max_pulses") {
    w.max_pulses = config_u64(key, value);
  } else if (key == "cost.get_epoch") {
    w.cost.get_epoch = config_u64(key, value);
  } else if (key == "cost.per_byte") {
    w.cost.per_byte = config_u64(key, value);
  } else if (key == "cost.chunk_epoch") {
    w.cost.chunk_epoch = config_u64(key, value);
  } else if (key == "cost.message_setup") {
    w.cost.message_setup = config_u64(key, value);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

// TOML-style "key = value" lines; '#' starts a comment. A "[cost]" section
// header prefixes the following keys with "cost.".
inline RunConfig parse_config(std::istream& in, RunConfig cfg = {}) {
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": bad section header");
      section = detail::trim(line.substr(1, line.size() - 2));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    auto key = detail::trim(line.substr(0, eq));
    if (!section.empty()) key = section + "." + key;
    try {
      apply_setting(cfg, key, detail::trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return cfg;
}

}  // namespace pulse
