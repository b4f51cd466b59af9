// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "embckpt/quant/matrix.hpp"

namespace embckpt::quant {

enum class KMeansGranularity : uint8_t { per_vector, contiguous_blocks, clustered_blocks };

struct KMeansOptions {
  int bits = 4;
  KMeansGranularity granularity = KMeansGranularity::per_vector;
  std::size_t num_blocks = 1;  // ignored for per_vector
  uint32_t iterations = 15;
  uint64_t seed = 0;
};

struct Codebook {
  std::vector<float> centroids;  // exactly 2^bits entries
};

struct KMeansResult {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<Codebook> codebooks;
  std::vector<uint32_t> row_codebook;  // codebook index per row
  std::vector<uint8_t> codes;          // rows * dim, indexes the row's codebook

  std::vector<float> reconstruct() const;
};

// One-dimensional Lloyd's algorithm. Centroids start as a seeded sample of
// distinct input values; with no more distinct values than clusters the
// codebook is exact and padded with repeats of the largest value.
struct ScalarClustering {
  std::vector<float> centroids;      // ascending
  std::vector<uint8_t> assignment;   // per input value
  std::vector<double> sse_trace;     // SSE after each assignment pass
};

ScalarClustering lloyd_scalar(std::span<const float> values, uint32_t clusters,
                              uint32_t iterations, uint64_t seed);

KMeansResult kmeans_quantize(const MatrixView& rows, const KMeansOptions& options);

}  // namespace embckpt::quant
