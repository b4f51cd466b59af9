// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>

#include "corpus.hpp"
#include "doctest.h"
#include "embckpt/error.hpp"
#include "embckpt/quant/adaptive.hpp"

using namespace embckpt;
using namespace embckpt::quant;

namespace {

// Reference reconstruction error written directly from the formulas, in
// double precision, independent of the kernel code path.
double oracle_error(std::span<const float> x, double lo, double hi, int bits) {
  const double levels = (1 << bits) - 1;
  const double scale = (hi - lo) / levels;
  double sum = 0.0;
  for (float v : x) {
    const double c = std::clamp(static_cast<double>(v), lo, hi);
    const double q = scale == 0.0 ? lo : lo + scale * std::round((c - lo) / scale);
    sum += (v - q) * (v - q);
  }
  return std::sqrt(sum);
}

// Exhaustive search over every (x_min, x_max) on the step grid within the
// shrink budget.
double brute_force_best(std::span<const float> x, int bits, const AdaptiveConfig& cfg) {
  const auto naive = uniform_params(x, bits, RangeMode::asymmetric);
  const double lo0 = naive.x_min, hi0 = naive.x_max, step = (hi0 - lo0) / cfg.num_bins;
  const int budget = static_cast<int>(std::floor(cfg.ratio * cfg.num_bins + 1e-9));
  double best = oracle_error(x, lo0, hi0, bits);
  for (int a = 0; a <= budget; ++a) {
    for (int b = 0; a + b <= budget; ++b) {
      const double lo = lo0 + a * step, hi = hi0 - b * step;
      if (hi > lo) best = std::min(best, oracle_error(x, lo, hi, bits));
    }
  }
  return best;
}

double me(std::span<const float> x, const QuantParams& p) { return std::sqrt(squared_error(x, p)); }

}  // namespace

TEST_CASE("defaults per width") {
  CHECK(AdaptiveConfig::defaults_for(2).num_bins == 25);
  CHECK(AdaptiveConfig::defaults_for(2).ratio == 0.5);
  CHECK(AdaptiveConfig::defaults_for(3).num_bins == 25);
  CHECK(AdaptiveConfig::defaults_for(3).ratio == 0.2);
  CHECK(AdaptiveConfig::defaults_for(4).num_bins == 45);
  CHECK_THROWS_AS(adaptive_params(std::vector<float>{1, 2}, 2, {0, 0.5}), ConfigError);
  CHECK_THROWS_AS(adaptive_params(std::vector<float>{1, 2}, 2, {25, 0.0}), ConfigError);
  CHECK_THROWS_AS(adaptive_params(std::vector<float>{1, 2}, 2, {25, 1.5}), ConfigError);
}

TEST_CASE("vector on an exact grid keeps the naive range") {
  const std::vector<float> x{0, 1, 2, 3, 3, 1};
  const auto naive = uniform_params(x, 2, RangeMode::asymmetric);
  CHECK(me(x, naive) == 0.0);
  CHECK(adaptive_params(x, 2, {25, 0.5}) == naive);
}

TEST_CASE("one outlier: greedy search improves on min/max") {
  std::vector<float> x{10.0f};
  for (int i = 1; i <= 9; ++i) x.push_back(0.1f * i);
  const AdaptiveConfig cfg{25, 0.5};
  const auto naive = uniform_params(x, 2, RangeMode::asymmetric);
  const auto adaptive = adaptive_params(x, 2, cfg);

  const double naive_me = oracle_error(x, naive.x_min, naive.x_max, 2);
  const double best = brute_force_best(x, 2, cfg);
  const double greedy = oracle_error(x, adaptive.x_min, adaptive.x_max, 2);
  CHECK(best < naive_me);  // an interior optimum exists
  CHECK(greedy < naive_me);
  CHECK(greedy >= best - 1e-9);
  CHECK(me(x, adaptive) < me(x, naive));
}

TEST_CASE("adaptive never loses to naive asymmetric") {
  const auto corpus = testing::mixed_corpus(1500, 24, 99);
  std::mt19937_64 rng(1);
  for (std::size_t r = 0; r < corpus.rows; ++r) {
    const std::span<const float> x(corpus.row(r), corpus.dim);
    const AdaptiveConfig cfg{static_cast<uint32_t>(1 + rng() % 60), 0.05 + 0.95 * (rng() % 100) / 99.0};
    for (int bits : {2, 3, 4, 8}) {
      const auto naive = uniform_params(x, bits, RangeMode::asymmetric);
      const auto adaptive = adaptive_params(x, bits, cfg);
      REQUIRE(squared_error(x, adaptive) <= squared_error(x, naive));
      REQUIRE(adaptive.x_min <= adaptive.x_max);
      REQUIRE(adaptive.x_min >= naive.x_min);
      REQUIRE(adaptive.x_max <= naive.x_max);
    }
  }
}

TEST_CASE("search never shrinks past the ratio budget") {
  const auto corpus = testing::mixed_corpus(200, 16, 5);
  for (std::size_t r = 0; r < corpus.rows; ++r) {
    const std::span<const float> x(corpus.row(r), corpus.dim);
    const auto naive = uniform_params(x, 2, RangeMode::asymmetric);
    const auto p = adaptive_params(x, 2, {25, 0.2});
    const double range = static_cast<double>(naive.x_max) - naive.x_min;
    const double shrink = range - (static_cast<double>(p.x_max) - p.x_min);
    REQUIRE(shrink <= 0.2 * range * (1 + 1e-6) + 1e-30);
  }
}

TEST_CASE("checkpoint codec: adaptive up to 4 bits, naive at 8") {
  std::vector<float> x{10.0f};
  for (int i = 1; i <= 9; ++i) x.push_back(0.1f * i);
  CHECK(checkpoint_params(x, 8) == uniform_params(x, 8, RangeMode::asymmetric));
  CHECK(checkpoint_params(x, 2) == adaptive_params(x, 2, AdaptiveConfig::defaults_for(2)));
}
