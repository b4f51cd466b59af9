// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "embckpt/crc32c.hpp"

#if EMBCKPT_HAVE_AVX2
#include <nmmintrin.h>

#include <cstring>
#endif

namespace embckpt::simd {

#if EMBCKPT_HAVE_AVX2
namespace {

uint32_t crc32c_hw(std::span<const uint8_t> data, uint32_t crc) {
  uint64_t c = ~crc;
  const uint8_t* p = data.data();
  std::size_t n = data.size();
  for (; n >= 8; n -= 8, p += 8) {
    uint64_t word;
    std::memcpy(&word, p, 8);
    c = _mm_crc32_u64(c, word);
  }
  uint32_t c32 = static_cast<uint32_t>(c);
  for (; n > 0; --n, ++p) c32 = _mm_crc32_u8(c32, *p);
  return ~c32;
}

}  // namespace
#endif

Crc32cFn crc32c_sse42() {
#if EMBCKPT_HAVE_AVX2
  if (__builtin_cpu_supports("sse4.2")) return &crc32c_hw;
#endif
  return nullptr;
}

}  // namespace embckpt::simd
