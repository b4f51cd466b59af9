// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "embckpt/sim/workload.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <string>

#include "embckpt/error.hpp"
#include "embckpt/random.hpp"

namespace embckpt::sim {

namespace {

constexpr uint32_t kRowStream = 0x7a697066u;    // "zipf"
constexpr uint32_t kDeltaStream = 0x64656c74u;  // "delt"
constexpr uint32_t kDenseStream = 0x646e7364u;  // "dnsd"

uint64_t fnv(uint64_t h, uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xff;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

void WorkloadConfig::validate() const {
  model.validate();
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (!(zipf_s > 0.0) || !std::isfinite(zipf_s)) throw ConfigError("zipf_s must be positive");
  if (batches_per_interval < 1) throw ConfigError("batches_per_interval must be at least 1");
  if (num_intervals < 1) throw ConfigError("num_intervals must be at least 1");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("lr must be finite and >= 0");
  if (total_batches() > 0xffffffffull) throw ConfigError("too many batches for the stream counter");
}

ZipfSampler::ZipfSampler(uint64_t rows, double s) : cdf_(rows) {
  if (rows == 0) throw ConfigError("zipf sampler over zero rows");
  double acc = 0.0;
  for (uint64_t k = 0; k < rows; ++k) {
    acc += std::pow(static_cast<double>(k + 1), -s);
    cdf_[k] = acc;
  }
  for (auto& c : cdf_) c /= acc;
  cdf_.back() = 1.0;
}

uint64_t ZipfSampler::sample(double u) const {
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return std::min<uint64_t>(static_cast<uint64_t>(it - cdf_.begin()), cdf_.size() - 1);
}

double ZipfSampler::probability(uint64_t rank) const {
  return rank == 0 ? cdf_[0] : cdf_[rank] - cdf_[rank - 1];
}

Workload::Workload(WorkloadConfig config) : config_(std::move(config)) {
  config_.validate();
  for (uint64_t rows : config_.model.rows_per_table) samplers_.emplace_back(rows, config_.zipf_s);
}

Batch Workload::generate(uint64_t batch_index) const {
  const auto key = PhiloxKey::from_seed(config_.seed);
  const uint32_t b = static_cast<uint32_t>(batch_index);
  const uint32_t dim = config_.model.dim;
  Batch batch;
  batch.index = batch_index;
  batch.tables.resize(samplers_.size());
  for (uint32_t t = 0; t < samplers_.size(); ++t) {
    auto& tb = batch.tables[t];
    CounterStream rows(key, kRowStream, t, b);
    tb.rows.resize(config_.batch_size);
    for (auto& r : tb.rows) r = samplers_[t].sample(rows.next_uniform01());
    CounterStream deltas(key, kDeltaStream, t, b);
    tb.deltas.resize(std::size_t{config_.batch_size} * dim);
    for (auto& d : tb.deltas) d = static_cast<float>(config_.lr * deltas.next_normal());
  }
  CounterStream dense(key, kDenseStream, 0, b);
  batch.dense_delta.resize(config_.model.dense_size);
  for (auto& d : batch.dense_delta) d = static_cast<float>(config_.lr * dense.next_normal());
  return batch;
}

Batch generate_batch(const WorkloadConfig& config, uint64_t batch_index) {
  return Workload(config).generate(batch_index);
}

void apply_batch(const Batch& batch, ModelState& model, Tracker& tracker) {
  if (batch.tables.size() != model.tables.size()) throw ShapeError("batch does not match the model");
  if (batch.index != model.reader.batches_consumed) {
    throw PreconditionError("batch " + std::to_string(batch.index) + " applied at reader position " +
                            std::to_string(model.reader.batches_consumed));
  }
  for (uint32_t t = 0; t < batch.tables.size(); ++t) {
    const auto& tb = batch.tables[t];
    auto& table = model.tables[t];
    tracker.mark(t, tb.rows);
    for (std::size_t i = 0; i < tb.rows.size(); ++i) {
      const float* d = tb.deltas.data() + i * table.dim;
      auto row = table.row(tb.rows[i]);
      for (uint32_t j = 0; j < table.dim; ++j) row[j] += d[j];
      if (table.has_aux()) {
        auto aux = table.aux_row(tb.rows[i]);
        for (uint32_t j = 0; j < table.dim; ++j) aux[j] += d[j] * d[j];
      }
    }
  }
  for (std::size_t j = 0; j < model.dense.size(); ++j) model.dense[j] += batch.dense_delta.at(j);
  model.reader.batches_consumed = batch.index + 1;
  model.reader.rng_cursor = batch.index + 1;
}

uint64_t batch_hash(const Batch& batch) {
  uint64_t h = fnv(0xcbf29ce484222325ull, batch.index);
  for (uint32_t t = 0; t < batch.tables.size(); ++t) {
    const auto& tb = batch.tables[t];
    const std::size_t dim = tb.rows.empty() ? 0 : tb.deltas.size() / tb.rows.size();
    for (std::size_t i = 0; i < tb.rows.size(); ++i) {
      h = fnv(h, t);
      h = fnv(h, tb.rows[i]);
      for (std::size_t j = 0; j < dim; ++j) h = fnv(h, std::bit_cast<uint32_t>(tb.deltas[i * dim + j]));
    }
  }
  for (float d : batch.dense_delta) h = fnv(h, std::bit_cast<uint32_t>(d));
  return h;
}

}  // namespace embckpt::sim
