// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>
#include <string_view>

#include "embckpt/simd/kernels.hpp"

namespace embckpt::simd {

#if EMBCKPT_HAVE_AVX2
const KernelTable& avx2_table();
#endif

const KernelTable* avx2_kernels() {
#if EMBCKPT_HAVE_AVX2
  static const bool supported = __builtin_cpu_supports("avx2");
  if (supported) return &avx2_table();
#endif
  return nullptr;
}

const KernelTable& active_kernels() {
  static const KernelTable* chosen = [] {
    const char* forced = std::getenv("EMBCKPT_SIMD");
    if (forced != nullptr && std::string_view(forced) == "scalar") return &scalar_kernels();
    const KernelTable* avx2 = avx2_kernels();
    return avx2 != nullptr ? avx2 : &scalar_kernels();
  }();
  return *chosen;
}

}  // namespace embckpt::simd
