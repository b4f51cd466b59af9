// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <array>
#include <cmath>

#include "embckpt/simd/kernels.hpp"

namespace embckpt::simd {

UniformGrid UniformGrid::make(float x_min, float x_max, int bits) {
  UniformGrid g;
  g.clip_lo = x_min;
  g.clip_hi = x_max;
  g.zero_point = x_min;
  g.max_code = (1u << bits) - 1u;
  g.scale = (static_cast<double>(x_max) - static_cast<double>(x_min)) / g.max_code;
  return g;
}

namespace {

inline uint32_t code_of(float x, const UniformGrid& g) {
  const float c = std::min(std::max(x, g.clip_lo), g.clip_hi);
  const double t = (static_cast<double>(c) - g.zero_point) / g.scale;
  double r = std::trunc(t);
  if (t - r >= 0.5) r += 1.0;
  return static_cast<uint32_t>(std::min(r, static_cast<double>(g.max_code)));
}

inline float value_of(uint32_t code, const UniformGrid& g) {
  const double scaled = g.scale * static_cast<double>(code);
  return static_cast<float>(scaled + g.zero_point);
}

MinMax min_max(std::span<const float> x) {
  MinMax m{x[0], x[0]};
  for (float v : x) {
    m.min = std::min(m.min, v);
    m.max = std::max(m.max, v);
  }
  // -0.0 and +0.0 compare equal; canonicalize so every variant agrees bitwise.
  return {m.min + 0.0f, m.max + 0.0f};
}

float max_abs(std::span<const float> x) {
  float m = 0.0f;
  for (float v : x) m = std::max(m, std::fabs(v));
  return m;
}

void quantize(std::span<const float> x, const UniformGrid& g, std::span<uint8_t> codes) {
  if (g.scale == 0.0) {
    std::fill(codes.begin(), codes.begin() + x.size(), uint8_t{0});
    return;
  }
  for (std::size_t i = 0; i < x.size(); ++i) codes[i] = static_cast<uint8_t>(code_of(x[i], g));
}

void dequantize(std::span<const uint8_t> codes, const UniformGrid& g, std::span<float> out) {
  for (std::size_t i = 0; i < codes.size(); ++i) out[i] = value_of(codes[i], g);
}

inline double combine(const std::array<double, 4>& lanes) {
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double quant_sq_error(std::span<const float> x, const UniformGrid& g) {
  std::array<double, 4> acc{};
  for (std::size_t i = 0; i < x.size(); ++i) {
    const float q = g.scale == 0.0 ? static_cast<float>(g.zero_point) : value_of(code_of(x[i], g), g);
    const double d = static_cast<double>(x[i]) - static_cast<double>(q);
    acc[i % 4] += d * d;
  }
  return combine(acc);
}

double sq_diff(std::span<const float> a, std::span<const float> b) {
  std::array<double, 4> acc{};
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc[i % 4] += d * d;
  }
  return combine(acc);
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", min_max, max_abs, quantize, dequantize, quant_sq_error,
                                 sq_diff};
  return table;
}

}  // namespace embckpt::simd
