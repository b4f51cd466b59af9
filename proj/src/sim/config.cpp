// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "embckpt/sim/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "embckpt/error.hpp"

namespace embckpt::sim {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  uint64_t out = 0;
  const auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

uint32_t to_u32(const std::string& key, const std::string& v) {
  const uint64_t n = to_u64(key, v);
  if (n > 0xffffffffull) throw ConfigError("'" + key + "' is too large");
  return static_cast<uint32_t>(n);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

}  // namespace

std::vector<FailurePoint> parse_failures(const std::string& text) {
  std::vector<FailurePoint> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw ConfigError("failure point '" + item + "' is not interval:offset");
    out.push_back({to_u64("failures", trim(item.substr(0, colon))), to_u64("failures", trim(item.substr(colon + 1)))});
  }
  return out;
}

void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& v) {
  auto& w = c.workload;
  auto& m = w.model;
  auto& r = c.run;
  if (key == "run_id") {
    c.run_id = v;
  } else if (key == "tables" || key == "rows") {
    // Resolved together in validate(); keep the shape uniform.
    const std::size_t tables = key == "tables" ? to_u64(key, v) : m.num_tables();
    const uint64_t rows = key == "rows" ? to_u64(key, v) : (m.rows_per_table.empty() ? 0 : m.rows_per_table[0]);
    m.rows_per_table.assign(tables, rows);
  } else if (key == "dim") {
    m.dim = to_u32(key, v);
  } else if (key == "shards") {
    m.num_shards = to_u32(key, v);
  } else if (key == "aux_state") {
    m.has_aux_state = to_bool(key, v);
  } else if (key == "dense_size") {
    m.dense_size = to_u32(key, v);
  } else if (key == "batch_size") {
    w.batch_size = to_u32(key, v);
  } else if (key == "zipf_s") {
    w.zipf_s = to_double(key, v);
  } else if (key == "batches_per_interval") {
    w.batches_per_interval = to_u64(key, v);
    r.checkpoint_interval = w.batches_per_interval;
  } else if (key == "intervals") {
    w.num_intervals = to_u64(key, v);
  } else if (key == "lr") {
    w.lr = to_double(key, v);
  } else if (key == "seed") {
    w.seed = to_u64(key, v);
  } else if (key == "policy") {
    r.policy = parse_policy(v);
  } else if (key == "quantize") {
    r.quantize = to_bool(key, v);
  } else if (key == "bits") {
    if (v == "auto") {
      r.bits.reset();
    } else {
      r.bits = static_cast<int>(to_u32(key, v));
    }
  } else if (key == "bins") {
    if (!r.adaptive) r.adaptive = quant::AdaptiveConfig{};
    r.adaptive->num_bins = to_u32(key, v);
  } else if (key == "ratio") {
    if (!r.adaptive) r.adaptive = quant::AdaptiveConfig{};
    r.adaptive->ratio = to_double(key, v);
  } else if (key == "chunk_rows") {
    r.chunk_rows = to_u64(key, v);
  } else if (key == "keep") {
    r.keep_last_n = to_u64(key, v);
  } else if (key == "workers") {
    r.workers = to_u32(key, v);
  } else if (key == "restore_fallback") {
    r.restore_fallback = to_bool(key, v);
  } else if (key == "failure_p") {
    r.failure.p = to_double(key, v);
  } else if (key == "failure_nodes") {
    r.failure.nodes = to_u32(key, v);
  } else if (key == "failure_hours") {
    r.failure.expected_duration_hours = to_double(key, v);
  } else if (key == "failures") {
    c.failures = parse_failures(v);
  } else if (key == "segment_bytes") {
    c.segment_bytes = to_u64(key, v);
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void ExperimentConfig::validate() const {
  if (run_id.empty() || run_id.find('/') != std::string::npos) throw ConfigError("invalid run_id '" + run_id + "'");
  workload.validate();
  run.validate();
  if (run.checkpoint_interval != workload.batches_per_interval) {
    throw ConfigError("checkpoint interval must equal batches_per_interval");
  }
  if (segment_bytes == 0) throw ConfigError("segment_bytes must be positive");
  validate_schedule(failures, workload);
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  c.run.checkpoint_interval = c.workload.batches_per_interval;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_setting(c, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_config(in);
}

}  // namespace embckpt::sim
