// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace embckpt::quant {

/// ceil(count * bits / 8)
constexpr std::size_t packed_size(std::size_t count, int bits) {
  return (count * static_cast<std::size_t>(bits) + 7) / 8;
}

// LSB-first bit packing: code i occupies bits [i*N, (i+1)*N) of the little-endian
// byte stream. Trailing pad bits are zero.
void pack_codes_into(std::span<const uint8_t> codes, int bits, std::span<uint8_t> out);
std::vector<uint8_t> pack_codes(std::span<const uint8_t> codes, int bits);

/// Throws FormatError unless bytes.size() == packed_size(count, bits).
void unpack_codes_into(std::span<const uint8_t> bytes, int bits, std::span<uint8_t> codes);
std::vector<uint8_t> unpack_codes(std::span<const uint8_t> bytes, int bits, std::size_t count);

}  // namespace embckpt::quant
