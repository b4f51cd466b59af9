// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "embckpt/simd/kernels.hpp"

namespace embckpt::quant {

enum class RangeMode : uint8_t { symmetric, asymmetric };

// Per-vector uniform quantization parameters. Only (x_min, x_max) are stored;
// scale and zero point are derived.
struct QuantParams {
  int bits = 8;
  float x_min = 0.0f;
  float x_max = 0.0f;

  /// (x_max - x_min) / (2^bits - 1), in double precision.
  double scale() const;
  float zero_point() const { return x_min; }
  uint32_t max_code() const { return (1u << bits) - 1u; }
  simd::UniformGrid grid() const { return simd::UniformGrid::make(x_min, x_max, bits); }

  /// Throws DataError if bits is outside [1, 8], a bound is non-finite, or x_min > x_max.
  void validate() const;

  bool operator==(const QuantParams&) const = default;
};

struct QuantizedVector {
  QuantParams params;
  uint32_t dim = 0;
  std::vector<uint8_t> packed;  // LSB-first, see packing.hpp

  std::vector<uint8_t> codes() const;
};

/// Throws DataError on an empty vector or any NaN/Inf element.
void require_finite(std::span<const float> x);

QuantParams uniform_params(std::span<const float> x, int bits, RangeMode mode);

/// Codes for x under params, one byte per element (not packed).
void quantize_codes(std::span<const float> x, const QuantParams& params, std::span<uint8_t> codes);

QuantizedVector quantize(std::span<const float> x, const QuantParams& params);

/// Throws FormatError if any code is >= 2^bits.
void dequantize_codes(std::span<const uint8_t> codes, const QuantParams& params,
                      std::span<float> out);

std::vector<float> dequantize(const QuantizedVector& qv);

/// ‖x - deq(quant(x))‖² for one vector.
double squared_error(std::span<const float> x, const QuantParams& params);

}  // namespace embckpt::quant
