// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx2. Only reached through avx2_kernels(), which checks the
// CPU first.

#include <immintrin.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "embckpt/simd/kernels.hpp"

namespace embckpt::simd {

namespace {

inline float hmin(__m256 v) {
  __m128 m = _mm_min_ps(_mm256_castps256_ps128(v), _mm256_extractf128_ps(v, 1));
  m = _mm_min_ps(m, _mm_movehl_ps(m, m));
  m = _mm_min_ss(m, _mm_shuffle_ps(m, m, 1));
  return _mm_cvtss_f32(m);
}

inline float hmax(__m256 v) {
  __m128 m = _mm_max_ps(_mm256_castps256_ps128(v), _mm256_extractf128_ps(v, 1));
  m = _mm_max_ps(m, _mm_movehl_ps(m, m));
  m = _mm_max_ss(m, _mm_shuffle_ps(m, m, 1));
  return _mm_cvtss_f32(m);
}

MinMax min_max(std::span<const float> x) {
  const std::size_t n = x.size();
  std::size_t i = 0;
  MinMax m{x[0], x[0]};
  if (n >= 8) {
    __m256 lo = _mm256_loadu_ps(x.data());
    __m256 hi = lo;
    for (i = 8; i + 8 <= n; i += 8) {
      const __m256 v = _mm256_loadu_ps(x.data() + i);
      lo = _mm256_min_ps(lo, v);
      hi = _mm256_max_ps(hi, v);
    }
    m = {hmin(lo), hmax(hi)};
  }
  for (; i < n; ++i) {
    m.min = std::min(m.min, x[i]);
    m.max = std::max(m.max, x[i]);
  }
  return {m.min + 0.0f, m.max + 0.0f};
}

float max_abs(std::span<const float> x) {
  const __m256 sign = _mm256_set1_ps(-0.0f);
  __m256 acc = _mm256_setzero_ps();
  std::size_t i = 0;
  for (; i + 8 <= x.size(); i += 8) {
    acc = _mm256_max_ps(acc, _mm256_andnot_ps(sign, _mm256_loadu_ps(x.data() + i)));
  }
  float m = hmax(acc);
  for (; i < x.size(); ++i) m = std::max(m, std::fabs(x[i]));
  return m;
}

struct GridRegs {
  __m128 lo, hi;
  __m256d zero_point, scale, max_code, half, one;

  explicit GridRegs(const UniformGrid& g)
      : lo(_mm_set1_ps(g.clip_lo)),
        hi(_mm_set1_ps(g.clip_hi)),
        zero_point(_mm256_set1_pd(g.zero_point)),
        scale(_mm256_set1_pd(g.scale)),
        max_code(_mm256_set1_pd(static_cast<double>(g.max_code))),
        half(_mm256_set1_pd(0.5)),
        one(_mm256_set1_pd(1.0)) {}
};

// Four codes (as doubles) for four floats.
inline __m256d codes4(__m128 x, const GridRegs& r) {
  const __m128 c = _mm_min_ps(_mm_max_ps(x, r.lo), r.hi);
  const __m256d t = _mm256_div_pd(_mm256_sub_pd(_mm256_cvtps_pd(c), r.zero_point), r.scale);
  const __m256d tr = _mm256_round_pd(t, _MM_FROUND_TO_ZERO | _MM_FROUND_NO_EXC);
  const __m256d up = _mm256_cmp_pd(_mm256_sub_pd(t, tr), r.half, _CMP_GE_OQ);
  return _mm256_min_pd(_mm256_add_pd(tr, _mm256_and_pd(up, r.one)), r.max_code);
}

inline __m128 values4(__m256d codes, const GridRegs& r) {
  return _mm256_cvtpd_ps(_mm256_add_pd(_mm256_mul_pd(r.scale, codes), r.zero_point));
}

void quantize(std::span<const float> x, const UniformGrid& g, std::span<uint8_t> codes) {
  if (g.scale == 0.0) {
    std::fill(codes.begin(), codes.begin() + x.size(), uint8_t{0});
    return;
  }
  const GridRegs r(g);
  std::size_t i = 0;
  for (; i + 8 <= x.size(); i += 8) {
    const __m128i a = _mm256_cvttpd_epi32(codes4(_mm_loadu_ps(x.data() + i), r));
    const __m128i b = _mm256_cvttpd_epi32(codes4(_mm_loadu_ps(x.data() + i + 4), r));
    const __m128i words = _mm_packus_epi32(a, b);
    _mm_storel_epi64(reinterpret_cast<__m128i*>(codes.data() + i), _mm_packus_epi16(words, words));
  }
  if (i < x.size()) {
    alignas(16) std::array<float, 4> tail{};
    alignas(16) std::array<int32_t, 4> out{};
    for (; i < x.size(); i += 4) {
      const std::size_t n = std::min<std::size_t>(4, x.size() - i);
      tail.fill(g.clip_lo);
      std::copy_n(x.data() + i, n, tail.begin());
      _mm_store_si128(reinterpret_cast<__m128i*>(out.data()),
                      _mm256_cvttpd_epi32(codes4(_mm_load_ps(tail.data()), r)));
      for (std::size_t k = 0; k < n; ++k) codes[i + k] = static_cast<uint8_t>(out[k]);
    }
  }
}

void dequantize(std::span<const uint8_t> codes, const UniformGrid& g, std::span<float> out) {
  const GridRegs r(g);
  std::size_t i = 0;
  for (; i + 8 <= codes.size(); i += 8) {
    const __m256i c32 =
        _mm256_cvtepu8_epi32(_mm_loadl_epi64(reinterpret_cast<const __m128i*>(codes.data() + i)));
    const __m128 lo = values4(_mm256_cvtepi32_pd(_mm256_castsi256_si128(c32)), r);
    const __m128 hi = values4(_mm256_cvtepi32_pd(_mm256_extracti128_si256(c32, 1)), r);
    _mm256_storeu_ps(out.data() + i, _mm256_set_m128(hi, lo));
  }
  for (; i < codes.size(); ++i) {
    const double scaled = g.scale * static_cast<double>(codes[i]);
    out[i] = static_cast<float>(scaled + g.zero_point);
  }
}

inline double combine(__m256d acc) {
  alignas(32) std::array<double, 4> lanes;
  _mm256_store_pd(lanes.data(), acc);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

double quant_sq_error(std::span<const float> x, const UniformGrid& g) {
  const GridRegs r(g);
  const bool flat = g.scale == 0.0;
  const __m256d flat_value = _mm256_set1_pd(static_cast<double>(static_cast<float>(g.zero_point)));
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  auto step = [&](__m128 v) {
    const __m256d q = flat ? flat_value : _mm256_cvtps_pd(values4(codes4(v, r), r));
    const __m256d d = _mm256_sub_pd(_mm256_cvtps_pd(v), q);
    return _mm256_mul_pd(d, d);
  };
  for (; i + 4 <= x.size(); i += 4) acc = _mm256_add_pd(acc, step(_mm_loadu_ps(x.data() + i)));
  if (i < x.size()) {
    // Padding lanes repeat clip_lo, which reconstructs exactly only on a
    // non-degenerate grid, so mask them out explicitly.
    alignas(16) std::array<float, 4> tail{};
    tail.fill(g.clip_lo);
    const std::size_t n = x.size() - i;
    std::copy_n(x.data() + i, n, tail.begin());
    alignas(32) std::array<double, 4> sq;
    _mm256_store_pd(sq.data(), step(_mm_load_ps(tail.data())));
    alignas(32) std::array<double, 4> masked{};
    for (std::size_t k = 0; k < n; ++k) masked[k] = sq[k];
    acc = _mm256_add_pd(acc, _mm256_load_pd(masked.data()));
  }
  return combine(acc);
}

double sq_diff(std::span<const float> a, std::span<const float> b) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= a.size(); i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_cvtps_pd(_mm_loadu_ps(a.data() + i)),
                                    _mm256_cvtps_pd(_mm_loadu_ps(b.data() + i)));
    acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
  }
  alignas(32) std::array<double, 4> lanes;
  _mm256_store_pd(lanes.data(), acc);
  for (std::size_t k = 0; i < a.size(); ++i, ++k) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    lanes[k] += d * d;
  }
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{"avx2", min_max, max_abs, quantize, dequantize, quant_sq_error,
                                 sq_diff};
  return table;
}

}  // namespace embckpt::simd
