// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "embckpt/model.hpp"
#include "embckpt/policy.hpp"
#include "embckpt/quant/adaptive.hpp"
#include "embckpt/store/checkpoint_store.hpp"
#include "embckpt/tracker.hpp"

namespace embckpt::engine {

struct RunConfig {
  uint64_t checkpoint_interval = 100;  // batches per interval
  PolicyKind policy = PolicyKind::intermittent;
  FailureModel failure;
  bool quantize = true;                // false writes fp32 rows (lossless)
  std::optional<int> bits;             // overrides select_bitwidth
  std::optional<quant::AdaptiveConfig> adaptive;  // overrides per-width bins/ratio
  uint64_t chunk_rows = 4096;
  uint64_t keep_last_n = 1;
  uint32_t workers = 1;                // background encoder threads per job
  bool restore_fallback = false;       // fall back to an older checkpoint on corruption

  /// Throws ConfigError.
  void validate() const;
  /// Width used at run start: `bits` if set, else select_bitwidth of the
  /// failure model; kFullPrecisionBits when quantization is off.
  int initial_bits() const;
};

enum class JobState : uint8_t { optimizing, writing, committed, aborted };

std::string_view to_string(JobState state);

struct JobResult {
  uint64_t sequence = 0;  // trigger count, from 0
  uint64_t snapshot_batch = 0;
  CheckpointKind kind = CheckpointKind::full;
  int bits = kFullPrecisionBits;
  JobState state = JobState::optimizing;
  std::optional<uint64_t> checkpoint_id;
  uint64_t payload_rows = 0;
  uint64_t payload_bytes = 0;  // shard payloads plus dense object
  uint64_t live_bytes = 0;     // after retention
  double dirty_fraction = 0.0; // interval scope, over all rows
  std::chrono::nanoseconds stall{0};
  std::string error;
};

class CheckpointJob {
 public:
  JobState state() const { return state_.load(); }
  bool terminal() const;
  const CheckpointPlan& plan() const { return plan_; }
  const std::shared_ptr<const ModelSnapshot>& snapshot() const { return snapshot_; }
  std::chrono::nanoseconds stall_duration() const { return result_.stall; }

  /// Blocks until the job is terminal.
  const JobResult& wait();

 private:
  friend class Engine;

  void set_state(JobState s);

  std::shared_ptr<const ModelSnapshot> snapshot_;
  CheckpointPlan plan_;
  TrackerView view_;
  PolicyState policy_before_;
  store::Manifest draft_;
  std::atomic<JobState> state_{JobState::optimizing};
  JobResult result_;
  std::mutex mu_;
  std::condition_variable cv_;
};

struct Restored {
  ModelState model;
  Tracker tracker;
  PolicyState policy;
  uint64_t checkpoint_id = 0;
  std::vector<uint64_t> chain;
  int bits = kFullPrecisionBits;  // width of the newest chain entry
};

/// Rebuilds the model from the newest valid checkpoint: baseline first, then
/// each increment in chain order, dequantizing quantized rows. Throws
/// PreconditionError when there is none; IntegrityError / FormatError on a
/// damaged chain unless `fallback` allows trying older checkpoints.
Restored restore(store::CheckpointStore& store, bool fallback = false);

/// Same, for one specific checkpoint id.
Restored restore_id(store::CheckpointStore& store, uint64_t id);

class Engine {
 public:
  Engine(RunConfig config, std::shared_ptr<store::CheckpointStore> store);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  const RunConfig& config() const { return config_; }
  int bits() const { return bits_; }
  void set_bits(int bits);

  /// Stalls the caller while the snapshot and tracker views are taken, then
  /// checkpoints in the background. Blocks first (counting an overrun) if the
  /// previous job is still running.
  std::shared_ptr<CheckpointJob> on_interval_end(ModelState& model, Tracker& tracker);

  /// Waits for the in-flight job, if any. If it aborted, its dirty rows and
  /// policy state are put back so the next checkpoint covers them.
  void drain(Tracker& tracker);

  /// restore() plus resetting the engine's policy state and chain position.
  Restored restore(bool fallback);
  void adopt(const Restored& restored);

  uint64_t overruns() const { return overruns_; }
  uint64_t max_concurrent_jobs() const { return max_active_; }
  const PolicyState& policy_state() const { return policy_; }
  /// Results of finished jobs, in trigger order.
  std::vector<JobResult> results() const;

 private:
  void run_job(CheckpointJob& job);
  void settle(Tracker* tracker);

  RunConfig config_;
  std::shared_ptr<store::CheckpointStore> store_;
  int bits_;
  PolicyState policy_;
  std::optional<uint64_t> last_committed_;
  std::optional<uint64_t> baseline_;
  std::shared_ptr<CheckpointJob> current_;
  std::thread worker_;
  // Snapshot buffers; one no longer referenced elsewhere is overwritten
  // instead of allocating (and page-faulting) a fresh copy of the model.
  std::vector<std::shared_ptr<ModelSnapshot>> snapshot_pool_;
  uint64_t sequence_ = 0;
  uint64_t overruns_ = 0;
  std::atomic<uint64_t> active_{0};
  std::atomic<uint64_t> max_active_{0};
  mutable std::mutex results_mu_;
  std::vector<JobResult> results_;
};

}  // namespace embckpt::engine
