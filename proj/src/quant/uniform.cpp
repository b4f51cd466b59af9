// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "embckpt/quant/uniform.hpp"

#include <cmath>
#include <string>

#include "embckpt/error.hpp"
#include "embckpt/quant/packing.hpp"

namespace embckpt::quant {

double QuantParams::scale() const {
  return (static_cast<double>(x_max) - static_cast<double>(x_min)) / max_code();
}

void QuantParams::validate() const {
  if (bits < 1 || bits > 8) throw DataError("bit width must be in [1, 8]");
  if (!std::isfinite(x_min) || !std::isfinite(x_max)) throw DataError("non-finite quantization range");
  if (x_min > x_max) throw DataError("quantization range has x_min > x_max");
}

std::vector<uint8_t> QuantizedVector::codes() const { return unpack_codes(packed, params.bits, dim); }

void require_finite(std::span<const float> x) {
  if (x.empty()) throw DataError("cannot quantize an empty vector");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw DataError("non-finite element at index " + std::to_string(i));
  }
}

QuantParams uniform_params(std::span<const float> x, int bits, RangeMode mode) {
  require_finite(x);
  const auto& k = simd::active_kernels();
  QuantParams p;
  p.bits = bits;
  if (mode == RangeMode::asymmetric) {
    const auto mm = k.min_max(x);
    p.x_min = mm.min;
    p.x_max = mm.max;
  } else {
    const float m = k.max_abs(x);
    p.x_min = -m;
    p.x_max = m;
  }
  p.validate();
  return p;
}

void quantize_codes(std::span<const float> x, const QuantParams& params, std::span<uint8_t> codes) {
  params.validate();
  if (codes.size() < x.size()) throw ShapeError("code buffer shorter than vector");
  simd::active_kernels().quantize(x, params.grid(), codes);
}

QuantizedVector quantize(std::span<const float> x, const QuantParams& params) {
  require_finite(x);
  std::vector<uint8_t> codes(x.size());
  quantize_codes(x, params, codes);
  return {params, static_cast<uint32_t>(x.size()), pack_codes(codes, params.bits)};
}

void dequantize_codes(std::span<const uint8_t> codes, const QuantParams& params,
                      std::span<float> out) {
  params.validate();
  if (out.size() < codes.size()) throw ShapeError("output buffer shorter than code list");
  for (uint8_t c : codes) {
    if (c > params.max_code()) throw FormatError("code exceeds 2^bits - 1");
  }
  simd::active_kernels().dequantize(codes, params.grid(), out);
}

std::vector<float> dequantize(const QuantizedVector& qv) {
  std::vector<float> out(qv.dim);
  dequantize_codes(qv.codes(), qv.params, out);
  return out;
}

double squared_error(std::span<const float> x, const QuantParams& params) {
  return simd::active_kernels().quant_sq_error(x, params.grid());
}

}  // namespace embckpt::quant
