// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "embckpt/engine.hpp"
#include "embckpt/sim/workload.hpp"
#include "embckpt/store/checkpoint_store.hpp"

namespace embckpt::sim {

// Kill the trainer before batch interval * batches_per_interval + offset.
struct FailurePoint {
  uint64_t interval = 0;
  uint64_t offset = 0;

  bool operator==(const FailurePoint&) const = default;
};

/// Throws ConfigError unless strictly increasing with offsets inside an interval.
void validate_schedule(const std::vector<FailurePoint>& schedule, const WorkloadConfig& workload);

struct IntervalMetrics {
  uint64_t sequence = 0;         // checkpoint trigger number, replays included
  uint64_t interval = 0;         // training interval that just ended
  std::string kind;              // full | incremental
  int bits = 32;
  std::string state;             // committed | aborted
  uint64_t checkpoint_id = 0;    // 0 if aborted
  uint64_t payload_rows = 0;
  uint64_t payload_bytes = 0;
  double payload_fraction = 0.0; // of a full fp32 checkpoint
  uint64_t live_bytes = 0;
  double dirty_fraction = 0.0;
  int64_t stall_ns = 0;          // reported only with timing
};

struct MetricsReport {
  std::string run_id;
  std::string policy;
  uint64_t full_fp32_bytes = 0;  // one full-precision checkpoint of the model
  int selected_bits = 32;
  int final_bits = 32;
  uint64_t resumes = 0;
  double restore_perturbation = 0.0;  // sum over restores of mean row l2 error
  double bandwidth_reduction = 0.0;
  double capacity_reduction = 0.0;
  uint64_t final_model_hash = 0;
  uint64_t lineage_hash = 0;          // hash of the surviving (row, delta) application log
  bool exactly_once = false;          // surviving lineage trains each batch once, in order
  std::vector<IntervalMetrics> intervals;

  bool timing = false;
  uint64_t overruns = 0;
  int64_t train_ns = 0;
  int64_t stall_ns = 0;

  double stall_fraction() const;
  void write_csv(std::ostream& out) const;
  void write_json(std::ostream& out) const;
};

/// Header of write_csv, in column order.
const std::vector<std::string>& csv_columns(bool timing);

/// Bytes of a full fp32 checkpoint: every section plus the dense object.
uint64_t full_checkpoint_bytes(const ModelConfig& config);

struct SimOptions {
  bool timing = false;
  /// Receives the model at the end of the run.
  ModelState* final_model = nullptr;
};

MetricsReport run(const WorkloadConfig& workload, const engine::RunConfig& run_config,
                  const std::vector<FailurePoint>& schedule, std::shared_ptr<store::CheckpointStore> store,
                  const SimOptions& options = {});

/// Trains every batch without checkpointing and returns the final model.
ModelState train_uninterrupted(const WorkloadConfig& workload);

}  // namespace embckpt::sim
