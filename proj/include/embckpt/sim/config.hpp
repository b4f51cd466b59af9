// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

// Experiment config files: one `key = value` per line, `#` starts a comment,
// blank lines ignored. Unknown keys and malformed values are ConfigErrors.
// See configs/ for documented examples.

#pragma once

#include <istream>
#include <string>
#include <vector>

#include "embckpt/engine.hpp"
#include "embckpt/sim/simulator.hpp"
#include "embckpt/sim/workload.hpp"

namespace embckpt::sim {

struct ExperimentConfig {
  std::string run_id = "run";
  WorkloadConfig workload;
  engine::RunConfig run;
  std::vector<FailurePoint> failures;
  uint64_t segment_bytes = store::kDefaultSegmentBytes;

  /// Throws ConfigError.
  void validate() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Applies one `key = value` setting; used by the parser and by tests.
void apply_setting(ExperimentConfig& config, const std::string& key, const std::string& value);

/// "7:43,12:0" -> {{7, 43}, {12, 0}}. Empty string -> no failures.
std::vector<FailurePoint> parse_failures(const std::string& text);

}  // namespace embckpt::sim
