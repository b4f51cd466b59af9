// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

namespace embckpt::simd {

struct MinMax {
  float min;
  float max;
};

// Uniform quantization grid derived from (x_min, x_max, bits). Codes are
// computed in double precision:
//   c    = clamp(x, clip_lo, clip_hi)            (binary32)
//   t    = (c - zero_point) / scale              (binary64)
//   code = min(trunc(t) + (t - trunc(t) >= 0.5), max_code)
//   deq  = (float)(scale * code + zero_point)    (no fused multiply-add)
// Every kernel variant must follow these steps exactly; reductions accumulate
// element i into lane i % 4 and combine as (l0 + l1) + (l2 + l3).
struct UniformGrid {
  float clip_lo;
  float clip_hi;
  double zero_point;
  double scale;  // 0 means a degenerate range: all codes are 0
  uint32_t max_code;

  static UniformGrid make(float x_min, float x_max, int bits);
};

struct KernelTable {
  const char* name;
  MinMax (*min_max)(std::span<const float> x);
  float (*max_abs)(std::span<const float> x);
  void (*quantize)(std::span<const float> x, const UniformGrid& grid, std::span<uint8_t> codes);
  void (*dequantize)(std::span<const uint8_t> codes, const UniformGrid& grid, std::span<float> out);
  /// Σ (x - deq(quant(x)))², the squared reconstruction error of one vector.
  double (*quant_sq_error)(std::span<const float> x, const UniformGrid& grid);
  /// Σ (a - b)² over two equal-length spans.
  double (*sq_diff)(std::span<const float> a, std::span<const float> b);
};

const KernelTable& scalar_kernels();

/// AVX2 variants, or nullptr when not compiled in or not supported by the CPU.
const KernelTable* avx2_kernels();

/// Best table for this CPU. Setting EMBCKPT_SIMD=scalar forces the reference.
const KernelTable& active_kernels();

}  // namespace embckpt::simd
