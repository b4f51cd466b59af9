// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "embckpt/quant/adaptive.hpp"

#include <cmath>

#include "embckpt/error.hpp"

namespace embckpt::quant {

AdaptiveConfig AdaptiveConfig::defaults_for(int bits) {
  if (bits <= 2) return {25, 0.5};
  if (bits == 3) return {25, 0.2};
  return {45, 0.2};
}

void AdaptiveConfig::validate() const {
  if (num_bins < 1) throw ConfigError("adaptive search needs at least one bin");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("adaptive ratio must be in (0, 1]");
}

QuantParams adaptive_params(std::span<const float> x, int bits, const AdaptiveConfig& cfg) {
  cfg.validate();
  const QuantParams naive = uniform_params(x, bits, RangeMode::asymmetric);
  const double lo0 = naive.x_min;
  const double hi0 = naive.x_max;
  const double range = hi0 - lo0;
  if (range <= 0.0) return naive;

  const double step = range / cfg.num_bins;
  // Steps are counted in whole bins so the budget does not drift with rounding.
  const auto budget = static_cast<uint32_t>(std::floor(cfg.ratio * cfg.num_bins + 1e-9));

  const simd::KernelTable& k = simd::active_kernels();
  auto candidate = [&](uint32_t lo_steps, uint32_t hi_steps) {
    QuantParams p = naive;
    p.x_min = static_cast<float>(lo0 + lo_steps * step);
    p.x_max = static_cast<float>(hi0 - hi_steps * step);
    return p;
  };

  QuantParams best = naive;
  double best_err = k.quant_sq_error(x, naive.grid());
  uint32_t lo_steps = 0;
  uint32_t hi_steps = 0;
  for (uint32_t taken = 0; taken < budget; ++taken) {
    const QuantParams a = candidate(lo_steps + 1, hi_steps);
    const QuantParams b = candidate(lo_steps, hi_steps + 1);
    if (!(a.x_max > a.x_min)) break;
    const double err_a = k.quant_sq_error(x, a.grid());
    const double err_b = k.quant_sq_error(x, b.grid());
    double err;
    if (err_a <= err_b) {
      ++lo_steps;
      err = err_a;
    } else {
      ++hi_steps;
      err = err_b;
    }
    if (err < best_err) {
      best_err = err;
      best = candidate(lo_steps, hi_steps);
    }
  }
  return best;
}

QuantParams checkpoint_params(std::span<const float> x, int bits) {
  if (bits <= 4) return adaptive_params(x, bits, AdaptiveConfig::defaults_for(bits));
  return uniform_params(x, bits, RangeMode::asymmetric);
}

}  // namespace embckpt::quant
