// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "embckpt/error.hpp"

namespace embckpt::quant {

// Non-owning row-major view: rows x dim floats.
struct MatrixView {
  std::span<const float> data;
  std::size_t rows = 0;
  std::size_t dim = 0;

  MatrixView() = default;
  MatrixView(std::span<const float> d, std::size_t r, std::size_t c) : data(d), rows(r), dim(c) {
    if (d.size() != r * c) throw ShapeError("matrix data does not hold rows * dim elements");
  }

  std::span<const float> row(std::size_t r) const { return data.subspan(r * dim, dim); }
};

/// (1/m) Σ_i ‖a_i − b_i‖₂ over the m rows; 0 for an empty matrix.
double mean_l2_loss(const MatrixView& original, const MatrixView& reconstructed);

}  // namespace embckpt::quant
