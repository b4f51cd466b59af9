// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "embckpt/quant/packing.hpp"

#include <algorithm>
#include <string>

#include "embckpt/error.hpp"

namespace embckpt::quant {

namespace {

void check_bits(int bits) {
  if (bits < 1 || bits > 8) throw DataError("bit width must be in [1, 8], got " + std::to_string(bits));
}

}  // namespace

void pack_codes_into(std::span<const uint8_t> codes, int bits, std::span<uint8_t> out) {
  check_bits(bits);
  const std::size_t need = packed_size(codes.size(), bits);
  if (out.size() != need) throw ShapeError("pack output buffer has wrong size");
  std::fill(out.begin(), out.end(), uint8_t{0});
  if (bits == 8) {
    std::copy(codes.begin(), codes.end(), out.begin());
    return;
  }
  const uint32_t limit = 1u << bits;
  uint32_t acc = 0;
  int filled = 0;
  std::size_t o = 0;
  for (uint8_t c : codes) {
    if (c >= limit) throw DataError("code does not fit in " + std::to_string(bits) + " bits");
    acc |= uint32_t{c} << filled;
    filled += bits;
    while (filled >= 8) {
      out[o++] = static_cast<uint8_t>(acc);
      acc >>= 8;
      filled -= 8;
    }
  }
  if (filled > 0) out[o] = static_cast<uint8_t>(acc);
}

std::vector<uint8_t> pack_codes(std::span<const uint8_t> codes, int bits) {
  check_bits(bits);
  std::vector<uint8_t> out(packed_size(codes.size(), bits));
  pack_codes_into(codes, bits, out);
  return out;
}

void unpack_codes_into(std::span<const uint8_t> bytes, int bits, std::span<uint8_t> codes) {
  check_bits(bits);
  const std::size_t need = packed_size(codes.size(), bits);
  if (bytes.size() < need) throw FormatError("truncated packed code stream");
  if (bytes.size() > need) throw FormatError("packed code stream has trailing bytes");
  if (bits == 8) {
    std::copy(bytes.begin(), bytes.end(), codes.begin());
    return;
  }
  const uint32_t mask = (1u << bits) - 1u;
  uint32_t acc = 0;
  int filled = 0;
  std::size_t in = 0;
  for (uint8_t& c : codes) {
    while (filled < bits) {
      acc |= uint32_t{bytes[in++]} << filled;
      filled += 8;
    }
    c = static_cast<uint8_t>(acc & mask);
    acc >>= bits;
    filled -= bits;
  }
}

std::vector<uint8_t> unpack_codes(std::span<const uint8_t> bytes, int bits, std::size_t count) {
  std::vector<uint8_t> codes(count);
  unpack_codes_into(bytes, bits, codes);
  return codes;
}

}  // namespace embckpt::quant
