// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "embckpt/store/manifest.hpp"

#include <json.hpp>

namespace embckpt::store {

using nlohmann::json;

uint64_t Manifest::payload_bytes() const {
  uint64_t n = 0;
  for (const auto& s : shards) n += s.bytes;
  return n;
}

uint64_t Manifest::stored_bytes() const { return payload_bytes() + dense.bytes; }

ModelConfig Manifest::model_config() const {
  ModelConfig c;
  c.num_shards = num_shards;
  c.has_aux_state = has_aux;
  c.dense_size = dense_size;
  c.dim = tables.empty() ? 0 : tables.front().dim;
  for (const auto& t : tables) c.rows_per_table.push_back(t.rows);
  return c;
}

const ShardEntry* Manifest::shard(uint32_t shard_id) const {
  for (const auto& s : shards) {
    if (s.shard_id == shard_id) return &s;
  }
  return nullptr;
}

std::string to_json(const Manifest& m) {
  json j;
  j["format"] = 1;
  j["run_id"] = m.run_id;
  j["checkpoint_id"] = m.checkpoint_id;
  j["kind"] = std::string(to_string(m.kind));
  j["base_id"] = m.base_id ? json(*m.base_id) : json(nullptr);
  j["parent_id"] = m.parent_id ? json(*m.parent_id) : json(nullptr);
  j["policy"] = std::string(to_string(m.policy));
  j["bitwidth"] = m.bits;
  j["snapshot_batch"] = m.snapshot_batch;
  j["reader_state"] = {{"batches_consumed", m.reader.batches_consumed},
                       {"rng_cursor", m.reader.rng_cursor}};
  j["num_shards"] = m.num_shards;
  j["has_aux"] = m.has_aux;
  j["dense_size"] = m.dense_size;
  j["tables"] = json::array();
  for (const auto& t : m.tables) {
    j["tables"].push_back({{"table_id", t.table_id}, {"rows", t.rows}, {"dim", t.dim}, {"shard", t.shard}});
  }
  j["shards"] = json::array();
  for (const auto& s : m.shards) {
    j["shards"].push_back({{"shard_id", s.shard_id}, {"keys", s.keys}, {"bytes", s.bytes}, {"crc32c", s.crc32c}});
  }
  j["dense"] = {{"key", m.dense.key}, {"bytes", m.dense.bytes}, {"crc32c", m.dense.crc32c}};
  j["history"] = m.history;
  j["payload_rows"] = m.payload_rows;
  return j.dump(2) + "\n";
}

namespace {

std::optional<uint64_t> opt_id(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<uint64_t>();
}

}  // namespace

Manifest parse_manifest(std::span<const uint8_t> bytes) {
  try {
    const json j = json::parse(bytes.begin(), bytes.end());
    if (j.at("format").get<int>() != 1) throw FormatError("unsupported manifest format");
    Manifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.checkpoint_id = j.at("checkpoint_id").get<uint64_t>();
    m.kind = parse_checkpoint_kind(j.at("kind").get<std::string>());
    m.base_id = opt_id(j.at("base_id"));
    m.parent_id = opt_id(j.at("parent_id"));
    try {
      m.policy = parse_policy(j.at("policy").get<std::string>());
    } catch (const ConfigError& e) {
      throw FormatError(e.what());
    }
    m.bits = j.at("bitwidth").get<int>();
    m.snapshot_batch = j.at("snapshot_batch").get<uint64_t>();
    m.reader.batches_consumed = j.at("reader_state").at("batches_consumed").get<uint64_t>();
    m.reader.rng_cursor = j.at("reader_state").at("rng_cursor").get<uint64_t>();
    m.num_shards = j.at("num_shards").get<uint32_t>();
    m.has_aux = j.at("has_aux").get<bool>();
    m.dense_size = j.at("dense_size").get<uint32_t>();
    for (const auto& t : j.at("tables")) {
      m.tables.push_back({t.at("table_id").get<uint32_t>(), t.at("rows").get<uint64_t>(),
                          t.at("dim").get<uint32_t>(), t.at("shard").get<uint32_t>()});
    }
    for (const auto& s : j.at("shards")) {
      m.shards.push_back({s.at("shard_id").get<uint32_t>(), s.at("keys").get<std::vector<std::string>>(),
                          s.at("bytes").get<uint64_t>(), s.at("crc32c").get<uint32_t>()});
    }
    const auto& d = j.at("dense");
    m.dense = {d.at("key").get<std::string>(), d.at("bytes").get<uint64_t>(), d.at("crc32c").get<uint32_t>()};
    m.history = j.at("history").get<std::vector<double>>();
    m.payload_rows = j.at("payload_rows").get<uint64_t>();
    if (m.kind == CheckpointKind::full && m.base_id) throw FormatError("full checkpoint with a base");
    if (m.kind == CheckpointKind::incremental && (!m.base_id || !m.parent_id)) {
      throw FormatError("incremental checkpoint without base and parent");
    }
    return m;
  } catch (const json::exception& e) {
    throw FormatError(std::string("manifest: ") + e.what());
  }
}

}  // namespace embckpt::store
