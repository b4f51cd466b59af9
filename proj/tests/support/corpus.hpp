// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

// Seeded vector corpora shared by the unit and acceptance tests.

#pragma once

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace embckpt::testing {

struct Corpus {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<float> data;

  const float* row(std::size_t r) const { return data.data() + r * dim; }
};

// Mixed-scale vectors: Gaussian at random scales and offsets, uniform,
// outlier-contaminated, exponential (one-sided) and constant rows.
inline Corpus mixed_corpus(std::size_t rows, std::size_t dim, uint64_t seed) {
  Corpus c{rows, dim, std::vector<float>(rows * dim)};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::exponential_distribution<double> expo(1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double scale = std::pow(10.0, -3.0 + 5.0 * unit(rng));
    const double offset = scale * (unit(rng) - 0.5) * 4.0;
    float* out = c.data.data() + r * dim;
    const int kind = static_cast<int>(r % 5);
    for (std::size_t j = 0; j < dim; ++j) {
      double x = 0.0;
      switch (kind) {
        case 0: x = offset + scale * normal(rng); break;
        case 1: x = offset + scale * (2.0 * unit(rng) - 1.0); break;
        case 2: x = scale * normal(rng) + (unit(rng) < 0.05 ? 50.0 * scale * normal(rng) : 0.0); break;
        case 3: x = offset + scale * expo(rng); break;
        default: x = offset; break;
      }
      out[j] = static_cast<float>(x);
    }
  }
  return c;
}

// Non-symmetric vectors: shifted, right-skewed (gamma-like) element
// distributions with an occasional heavy tail.
inline Corpus skewed_corpus(std::size_t rows, std::size_t dim, uint64_t seed) {
  Corpus c{rows, dim, std::vector<float>(rows * dim)};
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(2.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double scale = 0.05 + 0.5 * unit(rng);
    const double shift = -0.5 * scale * unit(rng);
    for (std::size_t j = 0; j < dim; ++j) {
      c.data[r * dim + j] = static_cast<float>(shift + scale * gamma(rng));
    }
  }
  return c;
}

/// Spacing between |x| and the next representable float above it.
inline double ulp_of(float x) {
  const float a = std::fabs(x);
  return static_cast<double>(std::nextafter(a, std::numeric_limits<float>::infinity())) - a;
}

}  // namespace embckpt::testing
