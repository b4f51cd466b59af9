// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

#include "embckpt/quant/uniform.hpp"

namespace embckpt::quant {

struct AdaptiveConfig {
  uint32_t num_bins = 25;
  double ratio = 0.5;  // fraction of the original range the search may shrink away

  /// Defaults per bit width: 25 bins for 2-3 bits, 45 for 4; ratio 0.5 at
  /// 2 bits, 0.2 otherwise.
  static AdaptiveConfig defaults_for(int bits);

  /// Throws ConfigError unless num_bins >= 1 and ratio in (0, 1].
  void validate() const;
};

/// Greedy range search. Starting from (min, max), each step moves one bound
/// inward by range/num_bins, keeping whichever of the two candidates
/// reconstructs the vector with lower error (ties shrink x_min). The search
/// stops once the total shrinkage would exceed ratio * range; the bounds with
/// the lowest error seen, including the starting pair, are returned.
QuantParams adaptive_params(std::span<const float> x, int bits, const AdaptiveConfig& cfg);

/// Checkpoint codec choice: adaptive search with default settings at <= 4
/// bits, plain asymmetric min/max at wider widths.
QuantParams checkpoint_params(std::span<const float> x, int bits);

}  // namespace embckpt::quant
