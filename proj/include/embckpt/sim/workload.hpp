// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

// Synthetic training workload. Every random draw comes from a counter-based
// stream keyed by (seed, table, batch index), so a batch can be regenerated
// exactly after a restore without replaying anything before it.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "embckpt/model.hpp"
#include "embckpt/tracker.hpp"

namespace embckpt::sim {

struct WorkloadConfig {
  ModelConfig model = ModelConfig::uniform(4, 16384, 32, 2);
  uint32_t batch_size = 160;  // row accesses per batch per table
  double zipf_s = 1.05;
  uint64_t batches_per_interval = 100;
  uint64_t num_intervals = 12;
  double lr = 0.01;           // standard deviation of each update delta
  uint64_t seed = 1;

  uint64_t total_batches() const { return batches_per_interval * num_intervals; }
  /// Throws ConfigError.
  void validate() const;
};

// Rank k in [0, rows) has probability proportional to (k + 1)^-s. Row index = rank.
class ZipfSampler {
 public:
  ZipfSampler(uint64_t rows, double s);
  /// u in [0, 1).
  uint64_t sample(double u) const;
  double probability(uint64_t rank) const;
  uint64_t rows() const { return cdf_.size(); }

 private:
  std::vector<double> cdf_;
};

struct TableBatch {
  std::vector<uint64_t> rows;  // batch_size accesses, duplicates allowed
  std::vector<float> deltas;   // batch_size * dim, one delta vector per access
};

struct Batch {
  uint64_t index = 0;
  std::vector<TableBatch> tables;
  std::vector<float> dense_delta;
};

class Workload {
 public:
  explicit Workload(WorkloadConfig config);

  const WorkloadConfig& config() const { return config_; }
  Batch generate(uint64_t batch_index) const;

 private:
  WorkloadConfig config_;
  std::vector<ZipfSampler> samplers_;
};

Batch generate_batch(const WorkloadConfig& config, uint64_t batch_index);

/// row += delta for every access in order (aux += delta^2 when present),
/// dense += dense_delta, marks the tracker and advances the reader.
void apply_batch(const Batch& batch, ModelState& model, Tracker& tracker);

/// Order-sensitive hash of every (table, row, delta) application in a batch.
uint64_t batch_hash(const Batch& batch);

}  // namespace embckpt::sim
