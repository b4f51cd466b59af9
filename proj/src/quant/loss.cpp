// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "embckpt/quant/matrix.hpp"
#include "embckpt/simd/kernels.hpp"

namespace embckpt::quant {

double mean_l2_loss(const MatrixView& original, const MatrixView& reconstructed) {
  if (original.rows != reconstructed.rows || original.dim != reconstructed.dim) {
    throw ShapeError("mean_l2_loss: matrices differ in shape");
  }
  if (original.rows == 0) return 0.0;
  const auto& k = simd::active_kernels();
  double total = 0.0;
  for (std::size_t r = 0; r < original.rows; ++r) {
    total += std::sqrt(k.sq_diff(original.row(r), reconstructed.row(r)));
  }
  return total / static_cast<double>(original.rows);
}

}  // namespace embckpt::quant
