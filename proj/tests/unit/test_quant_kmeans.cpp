// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include "corpus.hpp"
#include "doctest.h"
#include "embckpt/error.hpp"
#include "embckpt/quant/kmeans.hpp"

using namespace embckpt;
using namespace embckpt::quant;

namespace {

double loss_of(const testing::Corpus& c, const KMeansOptions& opt) {
  const MatrixView m(c.data, c.rows, c.dim);
  const auto rec = kmeans_quantize(m, opt).reconstruct();
  return mean_l2_loss(m, {rec, c.rows, c.dim});
}

}  // namespace

TEST_CASE("few distinct values cluster exactly") {
  const std::vector<float> x{0.5f, -1.0f, 0.5f, 2.0f, -1.0f, 7.0f};
  const auto c = lloyd_scalar(x, 4, 15, 1);
  REQUIRE(c.centroids.size() == 4);
  CHECK(c.centroids == std::vector<float>{-1.0f, 0.5f, 2.0f, 7.0f});
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(c.centroids[c.assignment[i]] == x[i]);

  const std::vector<float> two{3.0f, 3.0f, 1.0f};
  const auto padded = lloyd_scalar(two, 8, 15, 1);
  CHECK(padded.centroids.size() == 8);
  CHECK(padded.centroids.back() == 3.0f);

  const std::vector<float> m{1, 2, 1, 2, 5, 5, 1, 2};
  const auto r = kmeans_quantize({m, 2, 4}, {2, KMeansGranularity::per_vector, 1, 15, 0});
  CHECK(r.reconstruct() == m);
}

TEST_CASE("Lloyd SSE is non-increasing") {
  std::mt19937_64 rng(4);
  std::normal_distribution<float> normal(0.0f, 1.0f);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<float> x(200);
    for (auto& v : x) v = normal(rng) + (trial % 2 ? 3.0f * (rng() % 3) : 0.0f);
    const auto c = lloyd_scalar(x, 1u << (1 + trial % 4), 15, trial);
    REQUIRE(c.sse_trace.size() == 16);
    for (std::size_t i = 1; i < c.sse_trace.size(); ++i) {
      REQUIRE(c.sse_trace[i] <= c.sse_trace[i - 1] * (1 + 1e-12));
    }
  }
}

TEST_CASE("per-vector k-means beats contiguous blocks on heterogeneous rows") {
  const auto c = testing::mixed_corpus(200, 32, 8);
  for (int bits : {2, 3, 4}) {
    const double per_vector = loss_of(c, {bits, KMeansGranularity::per_vector, 1, 15, 1});
    const double contiguous = loss_of(c, {bits, KMeansGranularity::contiguous_blocks, 10, 15, 1});
    const double clustered = loss_of(c, {bits, KMeansGranularity::clustered_blocks, 10, 15, 1});
    CHECK(per_vector <= contiguous);
    CHECK(per_vector <= clustered);
  }
}

TEST_CASE("k-means is deterministic in its seed and shape-checked") {
  const auto c = testing::skewed_corpus(40, 16, 2);
  const MatrixView m(c.data, c.rows, c.dim);
  const KMeansOptions opt{3, KMeansGranularity::clustered_blocks, 4, 15, 9};
  CHECK(kmeans_quantize(m, opt).codes == kmeans_quantize(m, opt).codes);

  auto r = kmeans_quantize(m, {3, KMeansGranularity::contiguous_blocks, 4, 15, 9});
  CHECK(r.codebooks.size() == 4);
  for (const auto& b : r.codebooks) CHECK(b.centroids.size() == 8);

  CHECK_THROWS_AS(kmeans_quantize(m, {3, KMeansGranularity::contiguous_blocks, 0, 15, 9}), ConfigError);
  CHECK_THROWS_AS(kmeans_quantize(m, {3, KMeansGranularity::contiguous_blocks, 41, 15, 9}), ConfigError);
  CHECK_THROWS_AS(kmeans_quantize(m, {3, KMeansGranularity::per_vector, 1, 0, 9}), ConfigError);
}
