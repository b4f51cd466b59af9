// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "embckpt/quant/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "embckpt/error.hpp"
#include "embckpt/random.hpp"
#include "embckpt/simd/kernels.hpp"

namespace embckpt::quant {

namespace {

constexpr uint32_t kScalarStream = 0x6b6d7331u;
constexpr uint32_t kVectorStream = 0x6b6d7632u;

// First `count` entries of a seeded partial Fisher-Yates shuffle of [0, n).
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t count, CounterStream& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const uint64_t r = (uint64_t{rng.next_u32()} << 32) | rng.next_u32();
    std::swap(idx[i], idx[i + r % (n - i)]);
  }
  idx.resize(count);
  return idx;
}

// Assigns each value to its nearest centroid (ascending centroids; a value on
// a midpoint goes to the lower index) and returns the SSE.
double assign(std::span<const float> values, const std::vector<double>& centroids,
              std::vector<uint8_t>& assignment) {
  std::vector<double> mids(centroids.size() - 1);
  for (std::size_t c = 1; c < centroids.size(); ++c) mids[c - 1] = 0.5 * (centroids[c - 1] + centroids[c]);
  double sse = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = values[i];
    const auto c = static_cast<std::size_t>(std::lower_bound(mids.begin(), mids.end(), x) - mids.begin());
    assignment[i] = static_cast<uint8_t>(c);
    const double d = x - centroids[c];
    sse += d * d;
  }
  return sse;
}

}  // namespace

ScalarClustering lloyd_scalar(std::span<const float> values, uint32_t clusters,
                              uint32_t iterations, uint64_t seed) {
  if (clusters == 0 || clusters > 256) throw ConfigError("cluster count must be in [1, 256]");
  if (iterations == 0) throw ConfigError("k-means needs at least one iteration");
  if (values.empty()) throw DataError("cannot cluster an empty unit");

  std::vector<float> distinct(values.begin(), values.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  ScalarClustering out;
  out.assignment.resize(values.size());
  std::vector<double> centroids;
  if (distinct.size() <= clusters) {
    centroids.assign(distinct.begin(), distinct.end());
    centroids.resize(clusters, distinct.back());
    for (std::size_t i = 0; i < values.size(); ++i) {
      out.assignment[i] = static_cast<uint8_t>(
          std::lower_bound(distinct.begin(), distinct.end(), values[i]) - distinct.begin());
    }
    out.sse_trace.push_back(0.0);
    out.centroids.assign(centroids.begin(), centroids.end());
    return out;
  }

  CounterStream rng(PhiloxKey::from_seed(seed), kScalarStream, 0, 0);
  for (std::size_t i : sample_indices(distinct.size(), clusters, rng)) centroids.push_back(distinct[i]);
  std::sort(centroids.begin(), centroids.end());

  out.sse_trace.push_back(assign(values, centroids, out.assignment));
  std::vector<double> sum(clusters);
  std::vector<std::size_t> count(clusters);
  for (uint32_t it = 0; it < iterations; ++it) {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(count.begin(), count.end(), std::size_t{0});
    for (std::size_t i = 0; i < values.size(); ++i) {
      sum[out.assignment[i]] += values[i];
      ++count[out.assignment[i]];
    }
    for (uint32_t c = 0; c < clusters; ++c) {
      if (count[c] > 0) centroids[c] = sum[c] / static_cast<double>(count[c]);
    }
    std::sort(centroids.begin(), centroids.end());
    out.sse_trace.push_back(assign(values, centroids, out.assignment));
  }
  out.centroids.assign(centroids.begin(), centroids.end());
  return out;
}

std::vector<float> KMeansResult::reconstruct() const {
  std::vector<float> out(rows * dim);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto& book = codebooks[row_codebook[r]].centroids;
    for (std::size_t j = 0; j < dim; ++j) out[r * dim + j] = book[codes[r * dim + j]];
  }
  return out;
}

namespace {

// Clusters the rows listed in `members` as one unit sharing a codebook.
void quantize_unit(const MatrixView& m, const std::vector<std::size_t>& members,
                   const KMeansOptions& opt, uint64_t unit_seed, KMeansResult& out) {
  std::vector<float> values;
  values.reserve(members.size() * m.dim);
  for (std::size_t r : members) {
    const auto row = m.row(r);
    values.insert(values.end(), row.begin(), row.end());
  }
  const auto clustering = lloyd_scalar(values, 1u << opt.bits, opt.iterations, unit_seed);
  const auto book = static_cast<uint32_t>(out.codebooks.size());
  out.codebooks.push_back({clustering.centroids});
  for (std::size_t k = 0; k < members.size(); ++k) {
    out.row_codebook[members[k]] = book;
    std::copy_n(clustering.assignment.begin() + k * m.dim, m.dim,
                out.codes.begin() + members[k] * m.dim);
  }
}

uint64_t unit_seed(uint64_t seed, std::size_t unit) {
  return seed ^ (0x9E3779B97F4A7C15ull * (unit + 1));
}

// Euclidean k-means over whole rows; returns the group of each row.
std::vector<std::size_t> cluster_rows(const MatrixView& m, std::size_t groups, uint32_t iterations,
                                      uint64_t seed) {
  CounterStream rng(PhiloxKey::from_seed(seed), kVectorStream, 0, 0);
  std::vector<std::vector<float>> centers;
  for (std::size_t r : sample_indices(m.rows, groups, rng)) {
    const auto row = m.row(r);
    centers.emplace_back(row.begin(), row.end());
  }
  const auto& k = simd::active_kernels();
  std::vector<std::size_t> group(m.rows, 0);
  auto assign_rows = [&] {
    for (std::size_t r = 0; r < m.rows; ++r) {
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t g = 0; g < groups; ++g) {
        const double d = k.sq_diff(m.row(r), centers[g]);
        if (d < best) {
          best = d;
          group[r] = g;
        }
      }
    }
  };
  assign_rows();
  std::vector<double> sum(groups * m.dim);
  std::vector<std::size_t> count(groups);
  for (uint32_t it = 0; it < iterations; ++it) {
    std::fill(sum.begin(), sum.end(), 0.0);
    std::fill(count.begin(), count.end(), std::size_t{0});
    for (std::size_t r = 0; r < m.rows; ++r) {
      const auto row = m.row(r);
      for (std::size_t j = 0; j < m.dim; ++j) sum[group[r] * m.dim + j] += row[j];
      ++count[group[r]];
    }
    for (std::size_t g = 0; g < groups; ++g) {
      if (count[g] == 0) continue;
      for (std::size_t j = 0; j < m.dim; ++j) {
        centers[g][j] = static_cast<float>(sum[g * m.dim + j] / static_cast<double>(count[g]));
      }
    }
    assign_rows();
  }
  return group;
}

}  // namespace

KMeansResult kmeans_quantize(const MatrixView& m, const KMeansOptions& opt) {
  if (opt.bits < 1 || opt.bits > 8) throw ConfigError("k-means bit width must be in [1, 8]");
  if (opt.iterations < 1) throw ConfigError("k-means needs at least one iteration");
  if (m.rows == 0 || m.dim == 0) throw ShapeError("k-means needs a non-empty matrix");
  if (opt.granularity != KMeansGranularity::per_vector &&
      (opt.num_blocks < 1 || opt.num_blocks > m.rows)) {
    throw ConfigError("num_blocks must be in [1, rows]");
  }

  KMeansResult out;
  out.rows = m.rows;
  out.dim = m.dim;
  out.row_codebook.resize(m.rows);
  out.codes.resize(m.rows * m.dim);

  switch (opt.granularity) {
    case KMeansGranularity::per_vector:
      for (std::size_t r = 0; r < m.rows; ++r) quantize_unit(m, {r}, opt, unit_seed(opt.seed, r), out);
      break;
    case KMeansGranularity::contiguous_blocks:
      for (std::size_t b = 0; b < opt.num_blocks; ++b) {
        std::vector<std::size_t> members;
        for (std::size_t r = b * m.rows / opt.num_blocks; r < (b + 1) * m.rows / opt.num_blocks; ++r) {
          members.push_back(r);
        }
        quantize_unit(m, members, opt, unit_seed(opt.seed, b), out);
      }
      break;
    case KMeansGranularity::clustered_blocks: {
      const auto group = cluster_rows(m, opt.num_blocks, opt.iterations, opt.seed);
      std::vector<std::vector<std::size_t>> members(opt.num_blocks);
      for (std::size_t r = 0; r < m.rows; ++r) members[group[r]].push_back(r);
      for (std::size_t g = 0; g < opt.num_blocks; ++g) {
        if (!members[g].empty()) quantize_unit(m, members[g], opt, unit_seed(opt.seed, g), out);
      }
      break;
    }
  }
  return out;
}

}  // namespace embckpt::quant
