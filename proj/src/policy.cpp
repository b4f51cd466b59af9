// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "embckpt/policy.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "embckpt/error.hpp"

namespace embckpt {

std::string_view to_string(PolicyKind policy) {
  switch (policy) {
    case PolicyKind::full_only: return "full_only";
    case PolicyKind::one_shot_baseline: return "one_shot_baseline";
    case PolicyKind::consecutive_increment: return "consecutive_increment";
    case PolicyKind::intermittent: return "intermittent";
  }
  return "?";
}

std::string_view to_string(CheckpointKind kind) {
  return kind == CheckpointKind::full ? "full" : "incremental";
}

PolicyKind parse_policy(std::string_view name) {
  for (auto p : {PolicyKind::full_only, PolicyKind::one_shot_baseline,
                 PolicyKind::consecutive_increment, PolicyKind::intermittent}) {
    if (name == to_string(p)) return p;
  }
  throw ConfigError("unknown policy '" + std::string(name) + "'");
}

CheckpointKind parse_checkpoint_kind(std::string_view name) {
  if (name == "full") return CheckpointKind::full;
  if (name == "incremental") return CheckpointKind::incremental;
  throw FormatError("unknown checkpoint kind '" + std::string(name) + "'");
}

void IntervalHistory::record(double size) {
  if (!(size >= 0.0 && size <= 1.0)) throw DataError("incremental size must be in [0, 1]");
  sizes.push_back(size);
}

double IntervalHistory::full_cost() const {
  return std::accumulate(sizes.begin(), sizes.end(), 1.0);
}

double IntervalHistory::incremental_cost() const {
  return sizes.empty() ? 0.0 : static_cast<double>(sizes.size() + 1) * sizes.back();
}

CheckpointKind intermittent_decide(const IntervalHistory& history) {
  if (history.empty()) return CheckpointKind::incremental;
  return history.full_cost() <= history.incremental_cost() ? CheckpointKind::full
                                                           : CheckpointKind::incremental;
}

uint64_t CheckpointPlan::row_count(const ModelConfig& config) const {
  if (kind == CheckpointKind::full) return config.total_rows();
  uint64_t n = 0;
  for (const auto& r : rows) n += r.size();
  return n;
}

CheckpointPlan plan_checkpoint(PolicyKind policy, const TrackerView& view,
                               const IntervalHistory& history, bool has_baseline, int bits) {
  CheckpointPlan plan;
  plan.bits = bits;
  CheckpointKind kind = CheckpointKind::incremental;
  if (!has_baseline || policy == PolicyKind::full_only) {
    kind = CheckpointKind::full;
  } else if (policy == PolicyKind::intermittent) {
    kind = intermittent_decide(history);
  }
  plan.kind = kind;
  if (kind == CheckpointKind::full) return plan;

  const auto& scope =
      policy == PolicyKind::consecutive_increment ? view.interval : view.since_baseline;
  plan.rows.reserve(scope.size());
  for (const auto& bitmap : scope) plan.rows.push_back(dirty_rows(bitmap).indices);
  return plan;
}

CheckpointPlan PolicyState::next(const TrackerView& view, const ModelConfig& config, int bits) {
  CheckpointPlan plan = plan_checkpoint(policy, view, history, has_baseline, bits);
  if (plan.kind == CheckpointKind::full) {
    has_baseline = true;
    history.clear();
  } else {
    const double total = static_cast<double>(config.total_rows());
    history.record(static_cast<double>(plan.row_count(config)) / total);
  }
  return plan;
}

void FailureModel::validate() const {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("failure probability must be in [0, 1]");
  if (nodes < 1) throw ConfigError("failure model needs at least one node");
  if (!(expected_duration_hours >= 0.0)) throw ConfigError("expected duration must be >= 0");
}

double expected_failures(const FailureModel& model) {
  model.validate();
  return model.p * model.nodes * model.expected_duration_hours;
}

int select_bitwidth(double expected_resumes) {
  if (!(expected_resumes >= 0.0)) throw DataError("expected resume count must be >= 0");
  const double n = std::ceil(expected_resumes);
  if (n <= 1.0) return 2;
  if (n <= 3.0) return 3;
  if (n <= 20.0) return 4;
  return 8;
}

uint64_t resume_allowance(int bits) {
  switch (bits) {
    case 2: return 1;
    case 3: return 3;
    case 4: return 20;
    case 8: return 100;
    case kFullPrecisionBits: return std::numeric_limits<uint64_t>::max();
    default: throw ConfigError("no resume allowance for bit width " + std::to_string(bits));
  }
}

int fallback_check(uint64_t actual_resumes, int selected_bits) {
  if (selected_bits == 8 || selected_bits == kFullPrecisionBits) return selected_bits;
  return actual_resumes > resume_allowance(selected_bits) ? 8 : selected_bits;
}

}  // namespace embckpt
