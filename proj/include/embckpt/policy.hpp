// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "embckpt/tracker.hpp"

namespace embckpt {

/// Bit width used for unquantized (fp32) checkpoints.
inline constexpr int kFullPrecisionBits = 32;

enum class PolicyKind : uint8_t { full_only, one_shot_baseline, consecutive_increment, intermittent };
enum class CheckpointKind : uint8_t { full, incremental };

std::string_view to_string(PolicyKind policy);
std::string_view to_string(CheckpointKind kind);
/// Throws ConfigError on an unknown name.
PolicyKind parse_policy(std::string_view name);
CheckpointKind parse_checkpoint_kind(std::string_view name);

// Sizes S_1..S_i of the incremental checkpoints taken since the last full
// one, each as a fraction of the full checkpoint (S_0 = 1 is implicit).
struct IntervalHistory {
  std::vector<double> sizes;

  /// Throws DataError unless 0 <= size <= 1.
  void record(double size);
  void clear() { sizes.clear(); }
  bool empty() const { return sizes.empty(); }

  /// 1 + S_1 + ... + S_i
  double full_cost() const;
  /// (i + 1) * S_i
  double incremental_cost() const;
};

/// Full iff full_cost() <= incremental_cost(); an empty history is the
/// interval right after a baseline and always yields incremental.
CheckpointKind intermittent_decide(const IntervalHistory& history);

struct CheckpointPlan {
  CheckpointKind kind = CheckpointKind::full;
  int bits = kFullPrecisionBits;
  std::vector<std::vector<uint64_t>> rows;  // per table; unused for full plans

  uint64_t row_count(const ModelConfig& config) const;
};

CheckpointPlan plan_checkpoint(PolicyKind policy, const TrackerView& view,
                               const IntervalHistory& history, bool has_baseline, int bits);

// Everything the planner remembers between checkpoints. Copyable so a failed
// checkpoint can be rolled back.
struct PolicyState {
  PolicyKind policy = PolicyKind::intermittent;
  bool has_baseline = false;
  IntervalHistory history;

  /// Plans the next checkpoint and records its effect on the history.
  CheckpointPlan next(const TrackerView& view, const ModelConfig& config, int bits);
};

struct FailureModel {
  double p = 0.0;  // per-node failure probability per hour
  uint32_t nodes = 1;
  double expected_duration_hours = 0.0;

  void validate() const;
};

/// p * nodes * hours.
double expected_failures(const FailureModel& model);

/// Narrowest bit width whose resume allowance covers ceil(expected_resumes):
/// <= 1 -> 2, <= 3 -> 3, <= 20 -> 4, otherwise 8.
int select_bitwidth(double expected_resumes);

/// Resumes a checkpoint of this width tolerates (2 -> 1, 3 -> 3, 4 -> 20, 8 -> 100).
uint64_t resume_allowance(int bits);

/// 8 once actual_resumes exceeds the allowance of `selected_bits`, else `selected_bits`.
int fallback_check(uint64_t actual_resumes, int selected_bits);

}  // namespace embckpt
