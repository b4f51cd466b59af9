// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embckpt/bytes.hpp"
#include "embckpt/model.hpp"
#include "embckpt/policy.hpp"

namespace embckpt::store {

struct TableEntry {
  uint32_t table_id = 0;
  uint64_t rows = 0;
  uint32_t dim = 0;
  uint32_t shard = 0;

  bool operator==(const TableEntry&) const = default;
};

struct ShardEntry {
  uint32_t shard_id = 0;
  std::vector<std::string> keys;  // segment object names, relative to the checkpoint prefix
  uint64_t bytes = 0;
  uint32_t crc32c = 0;            // over the concatenated segments

  bool operator==(const ShardEntry&) const = default;
};

struct DenseEntry {
  std::string key;
  uint64_t bytes = 0;
  uint32_t crc32c = 0;

  bool operator==(const DenseEntry&) const = default;
};

struct Manifest {
  std::string run_id;
  uint64_t checkpoint_id = 0;
  CheckpointKind kind = CheckpointKind::full;
  std::optional<uint64_t> base_id;    // absent for full checkpoints
  std::optional<uint64_t> parent_id;  // previous committed checkpoint, incrementals only
  PolicyKind policy = PolicyKind::full_only;
  int bits = kFullPrecisionBits;
  uint64_t snapshot_batch = 0;
  ReaderState reader;
  uint32_t num_shards = 1;
  bool has_aux = false;
  uint32_t dense_size = 0;
  std::vector<TableEntry> tables;
  std::vector<ShardEntry> shards;
  DenseEntry dense;
  std::vector<double> history;  // intermittent predictor sizes after this checkpoint
  uint64_t payload_rows = 0;

  uint64_t payload_bytes() const;
  /// Shard payloads plus the dense object.
  uint64_t stored_bytes() const;
  ModelConfig model_config() const;
  const ShardEntry* shard(uint32_t shard_id) const;

  bool operator==(const Manifest&) const = default;
};

std::string to_json(const Manifest& manifest);
/// Throws FormatError on malformed JSON or missing/ill-typed fields.
Manifest parse_manifest(std::span<const uint8_t> bytes);

}  // namespace embckpt::store
