// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace embckpt {

struct ModelConfig {
  std::vector<uint64_t> rows_per_table;  // one entry per table
  uint32_t dim = 16;
  uint32_t num_shards = 1;
  bool has_aux_state = false;
  uint32_t dense_size = 64;  // flat MLP-proxy parameter count

  static ModelConfig uniform(std::size_t num_tables, uint64_t rows, uint32_t dim,
                             uint32_t num_shards, bool has_aux = false,
                             uint32_t dense_size = 64);

  std::size_t num_tables() const { return rows_per_table.size(); }
  uint32_t shard_of(std::size_t table_id) const {
    return static_cast<uint32_t>(table_id % num_shards);
  }
  uint64_t total_rows() const;

  /// Throws ConfigError when the config cannot describe a model.
  void validate() const;
};

// One embedding table; row r occupies values[r*dim, (r+1)*dim).
struct EmbeddingTable {
  uint32_t table_id = 0;
  uint64_t rows = 0;
  uint32_t dim = 0;
  std::vector<float> values;
  std::vector<float> aux;  // empty unless the model carries per-row aux state

  bool has_aux() const { return !aux.empty(); }

  std::span<float> row(uint64_t r) { return {values.data() + r * dim, dim}; }
  std::span<const float> row(uint64_t r) const { return {values.data() + r * dim, dim}; }
  std::span<float> aux_row(uint64_t r) { return {aux.data() + r * dim, dim}; }
  std::span<const float> aux_row(uint64_t r) const { return {aux.data() + r * dim, dim}; }

  bool operator==(const EmbeddingTable&) const = default;
};

struct ReaderState {
  uint64_t batches_consumed = 0;
  uint64_t rng_cursor = 0;

  bool operator==(const ReaderState&) const = default;
};

struct ModelState {
  ModelConfig config;
  std::vector<EmbeddingTable> tables;
  std::vector<float> dense;
  ReaderState reader;

  /// Table ids owned by a shard, ascending.
  std::vector<uint32_t> shard_tables(uint32_t shard) const;
};

struct ShardSnapshot {
  uint32_t shard_id = 0;
  std::vector<EmbeddingTable> tables;
};

// Deep, immutable copy of a ModelState taken during the trainer stall.
struct ModelSnapshot {
  ModelConfig config;
  std::vector<ShardSnapshot> shards;
  std::vector<float> dense;
  ReaderState reader;
  uint64_t snapshot_batch = 0;

  const EmbeddingTable& table(uint32_t table_id) const;
};

ModelState init_model(const ModelConfig& config, uint64_t seed);

std::shared_ptr<const ModelSnapshot> snapshot(const ModelState& model);

/// Overwrites `out` with a snapshot of `model`, reusing its buffers.
void snapshot_into(const ModelState& model, ModelSnapshot& out);

/// Rebuilds a live model from a snapshot (inverse of snapshot()).
ModelState to_model(const ModelSnapshot& snap);

/// 64-bit FNV-1a over every table value, aux value and dense parameter.
uint64_t model_hash(const ModelState& model);

}  // namespace embckpt
