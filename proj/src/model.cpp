// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "embckpt/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "embckpt/error.hpp"
#include "embckpt/random.hpp"

namespace embckpt {

namespace {

// Stream ids for init_model; tables use their id in word 1.
constexpr uint32_t kInitTableStream = 0x7461626cu;  // "tabl"
constexpr uint32_t kInitDenseStream = 0x64656e73u;  // "dens"

void fill_uniform(std::span<float> out, PhiloxKey key, uint32_t stream, uint32_t sub) {
  CounterStream rng(key, stream, sub, 0);
  for (float& v : out) v = uniform_pm1(rng.next_u32());
}

class Fnv1a {
 public:
  void add(std::span<const float> values) {
    for (float v : values) {
      auto bits = std::bit_cast<uint32_t>(v);
      for (int i = 0; i < 4; ++i) {
        hash_ ^= (bits >> (8 * i)) & 0xffu;
        hash_ *= 0x100000001b3ull;
      }
    }
  }
  uint64_t value() const { return hash_; }

 private:
  uint64_t hash_ = 0xcbf29ce484222325ull;
};

}  // namespace

ModelConfig ModelConfig::uniform(std::size_t num_tables, uint64_t rows, uint32_t dim,
                                 uint32_t num_shards, bool has_aux, uint32_t dense_size) {
  ModelConfig c;
  c.rows_per_table.assign(num_tables, rows);
  c.dim = dim;
  c.num_shards = num_shards;
  c.has_aux_state = has_aux;
  c.dense_size = dense_size;
  return c;
}

uint64_t ModelConfig::total_rows() const {
  return std::accumulate(rows_per_table.begin(), rows_per_table.end(), uint64_t{0});
}

void ModelConfig::validate() const {
  if (rows_per_table.empty()) throw ConfigError("model needs at least one table");
  if (dim == 0) throw ConfigError("embedding dim must be >= 1");
  if (num_shards == 0) throw ConfigError("num_shards must be >= 1");
  for (std::size_t t = 0; t < rows_per_table.size(); ++t) {
    if (rows_per_table[t] == 0) {
      throw ConfigError("table " + std::to_string(t) + " has zero rows");
    }
  }
}

std::vector<uint32_t> ModelState::shard_tables(uint32_t shard) const {
  std::vector<uint32_t> ids;
  for (uint32_t t = 0; t < tables.size(); ++t) {
    if (config.shard_of(t) == shard) ids.push_back(t);
  }
  return ids;
}

const EmbeddingTable& ModelSnapshot::table(uint32_t table_id) const {
  const auto& shard = shards.at(config.shard_of(table_id));
  for (const auto& t : shard.tables) {
    if (t.table_id == table_id) return t;
  }
  throw BoundsError("snapshot has no table " + std::to_string(table_id));
}

ModelState init_model(const ModelConfig& config, uint64_t seed) {
  config.validate();
  const auto key = PhiloxKey::from_seed(seed);
  ModelState m;
  m.config = config;
  m.tables.resize(config.num_tables());
  for (uint32_t t = 0; t < m.tables.size(); ++t) {
    auto& table = m.tables[t];
    table.table_id = t;
    table.rows = config.rows_per_table[t];
    table.dim = config.dim;
    table.values.resize(table.rows * table.dim);
    fill_uniform(table.values, key, kInitTableStream, t);
    if (config.has_aux_state) table.aux.assign(table.values.size(), 0.0f);
  }
  m.dense.resize(config.dense_size);
  fill_uniform(m.dense, key, kInitDenseStream, 0);
  return m;
}

std::shared_ptr<const ModelSnapshot> snapshot(const ModelState& model) {
  auto snap = std::make_shared<ModelSnapshot>();
  snapshot_into(model, *snap);
  return snap;
}

void snapshot_into(const ModelState& model, ModelSnapshot& out) {
  out.config = model.config;
  out.shards.resize(model.config.num_shards);
  for (uint32_t s = 0; s < model.config.num_shards; ++s) {
    auto& shard = out.shards[s];
    shard.shard_id = s;
    const auto ids = model.shard_tables(s);
    shard.tables.resize(ids.size());
    // Copy-assignment keeps each vector's storage when it is large enough.
    for (std::size_t i = 0; i < ids.size(); ++i) shard.tables[i] = model.tables[ids[i]];
  }
  out.dense = model.dense;
  out.reader = model.reader;
  out.snapshot_batch = model.reader.batches_consumed;
}

ModelState to_model(const ModelSnapshot& snap) {
  ModelState m;
  m.config = snap.config;
  m.tables.resize(snap.config.num_tables());
  for (const auto& shard : snap.shards) {
    for (const auto& t : shard.tables) m.tables.at(t.table_id) = t;
  }
  m.dense = snap.dense;
  m.reader = snap.reader;
  return m;
}

uint64_t model_hash(const ModelState& model) {
  Fnv1a h;
  for (const auto& t : model.tables) {
    h.add(t.values);
    h.add(t.aux);
  }
  h.add(model.dense);
  return h.value();
}

}  // namespace embckpt
