// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include <array>

#include "embckpt/crc32c.hpp"

namespace embckpt {

namespace simd {

namespace {

constexpr uint32_t kPolyReflected = 0x82F63B78u;

constexpr std::array<uint32_t, 256> make_table() {
  std::array<uint32_t, 256> t{};
  for (uint32_t i = 0; i < 256; ++i) {
    uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1u) ? (c >> 1) ^ kPolyReflected : c >> 1;
    t[i] = c;
  }
  return t;
}

constexpr auto kTable = make_table();

}  // namespace

uint32_t crc32c_scalar(std::span<const uint8_t> data, uint32_t crc) {
  crc = ~crc;
  for (uint8_t b : data) {
    crc = kTable[(crc ^ uint32_t{b}) & 0xffu] ^ (crc >> 8);
  }
  return ~crc;
}

}  // namespace simd

uint32_t crc32c(std::span<const uint8_t> data, uint32_t crc) {
  static const simd::Crc32cFn fn = [] {
    simd::Crc32cFn hw = simd::crc32c_sse42();
    return hw != nullptr ? hw : &simd::crc32c_scalar;
  }();
  return fn(data, crc);
}

}  // namespace embckpt
