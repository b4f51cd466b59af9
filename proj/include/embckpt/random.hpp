// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace embckpt {

// Philox4x32-10 counter-based generator. Every output block is a pure function
// of (counter, key), so any position in a stream can be regenerated without
// replaying the values before it.
struct PhiloxKey {
  uint32_t k0 = 0;
  uint32_t k1 = 0;

  static constexpr PhiloxKey from_seed(uint64_t seed) {
    return {static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32)};
  }
};

using PhiloxBlock = std::array<uint32_t, 4>;

constexpr PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key) {
  constexpr uint32_t kMul0 = 0xD2511F53u;
  constexpr uint32_t kMul1 = 0xCD9E8D57u;
  constexpr uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const uint64_t p0 = uint64_t{kMul0} * ctr[0];
    const uint64_t p1 = uint64_t{kMul1} * ctr[2];
    ctr = {static_cast<uint32_t>(p1 >> 32) ^ ctr[1] ^ key.k0, static_cast<uint32_t>(p1),
           static_cast<uint32_t>(p0 >> 32) ^ ctr[3] ^ key.k1, static_cast<uint32_t>(p0)};
    key.k0 += kWeyl0;
    key.k1 += kWeyl1;
  }
  return ctr;
}

/// Uniform float on [-1, 1) from the top 24 bits; exact in binary32.
constexpr float uniform_pm1(uint32_t bits) {
  return static_cast<float>(bits >> 8) * 0x1.0p-23f - 1.0f;
}

/// Uniform double on [0, 1) with 53 random bits.
constexpr double uniform01(uint32_t hi, uint32_t lo) {
  return static_cast<double>(((uint64_t{hi} << 32) | lo) >> 11) * 0x1.0p-53;
}

// Sequential view over one Philox stream. The stream is identified by three
// 32-bit words; the fourth counter word is the block position.
class CounterStream {
 public:
  CounterStream(PhiloxKey key, uint32_t id0, uint32_t id1, uint32_t id2)
      : key_(key), id_{id0, id1, id2} {}

  uint32_t next_u32() {
    if (lane_ == 4) refill();
    return block_[lane_++];
  }

  double next_uniform01() {
    const uint32_t hi = next_u32();
    return uniform01(hi, next_u32());
  }

  /// Standard normal via Box-Muller (cosine branch only).
  double next_normal() {
    const double u1 = 1.0 - next_uniform01();  // (0, 1]
    const double u2 = next_uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  void refill() {
    block_ = philox4x32_10({id_[0], id_[1], id_[2], position_++}, key_);
    lane_ = 0;
  }

  PhiloxKey key_;
  std::array<uint32_t, 3> id_;
  uint32_t position_ = 0;
  PhiloxBlock block_{};
  int lane_ = 4;
};

}  // namespace embckpt
