// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace embckpt {

// CRC-32C (Castagnoli). `crc` is the value returned by a previous call, so a
// stream can be checksummed in pieces: crc32c(b, crc32c(a)) == crc32c(a ++ b).
uint32_t crc32c(std::span<const uint8_t> data, uint32_t crc = 0);

namespace simd {
uint32_t crc32c_scalar(std::span<const uint8_t> data, uint32_t crc);
/// SSE4.2 variant; nullptr when unavailable.
using Crc32cFn = uint32_t (*)(std::span<const uint8_t>, uint32_t);
Crc32cFn crc32c_sse42();
}  // namespace simd

}  // namespace embckpt
