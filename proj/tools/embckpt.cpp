// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line driver: run experiments, inspect and prune checkpoint stores,
// benchmark the row codecs.

#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>

#include "embckpt/engine.hpp"
#include "embckpt/error.hpp"
#include "embckpt/quant/adaptive.hpp"
#include "embckpt/quant/kmeans.hpp"
#include "embckpt/quant/uniform.hpp"
#include "embckpt/sim/config.hpp"
#include "embckpt/sim/simulator.hpp"
#include "embckpt/store/checkpoint_store.hpp"

using namespace embckpt;

namespace {

constexpr int kUsageError = 2;

std::shared_ptr<store::ObjectStore> open_store(const std::string& dir) {
  if (dir.empty()) return std::make_shared<store::MemoryStore>();
  return std::make_shared<store::LocalDirStore>(dir);
}

int cmd_run(const std::string& config_path, const std::string& store_dir, const std::string& out,
            std::optional<uint64_t> seed, bool timing) {
  auto cfg = sim::load_config(config_path);
  if (seed) cfg.workload.seed = *seed;
  auto cs = std::make_shared<store::CheckpointStore>(open_store(store_dir), cfg.run_id, cfg.segment_bytes);
  if (cs->latest_valid()) throw ConfigError("run '" + cfg.run_id + "' already has checkpoints in this store");
  const auto report = sim::run(cfg.workload, cfg.run, cfg.failures, cs, {timing, nullptr});
  if (out.empty()) {
    report.write_csv(std::cout);
  } else {
    std::ofstream csv(out + ".csv"), json(out + ".json");
    if (!csv || !json) throw StoreError("cannot write report to " + out);
    report.write_csv(csv);
    report.write_json(json);
  }
  std::fprintf(stderr, "%s: %zu checkpoints, bandwidth x%.2f, capacity x%.2f, resumes %llu\n",
               cfg.run_id.c_str(), report.intervals.size(), report.bandwidth_reduction, report.capacity_reduction,
               static_cast<unsigned long long>(report.resumes));
  return 0;
}

int cmd_restore_check(const std::string& store_dir, const std::string& run_id) {
  store::CheckpointStore cs(open_store(store_dir), run_id);
  const auto latest = cs.latest_valid();
  if (!latest) {
    std::printf("run %s: no valid checkpoint\n", run_id.c_str());
    return 1;
  }
  const auto chain = cs.verify(*latest);
  const auto restored = engine::restore_id(cs, *latest);
  std::printf("run %s: latest valid %llu\n", run_id.c_str(), static_cast<unsigned long long>(*latest));
  for (const auto& m : chain) {
    std::printf("  %010llu %-11s bits=%-2d batch=%llu bytes=%llu rows=%llu\n",
                static_cast<unsigned long long>(m.checkpoint_id), std::string(to_string(m.kind)).c_str(), m.bits,
                static_cast<unsigned long long>(m.snapshot_batch), static_cast<unsigned long long>(m.stored_bytes()),
                static_cast<unsigned long long>(m.payload_rows));
  }
  std::printf("chain ok, model hash %016llx, resumes at batch %llu\n",
              static_cast<unsigned long long>(model_hash(restored.model)),
              static_cast<unsigned long long>(restored.model.reader.batches_consumed));
  return 0;
}

int cmd_gc(const std::string& store_dir, const std::string& run_id, uint64_t keep) {
  if (store_dir.empty()) throw ConfigError("gc needs --store");
  store::CheckpointStore cs(open_store(store_dir), run_id);
  const auto deleted = cs.gc(keep);
  for (uint64_t id : deleted) std::printf("deleted %010llu\n", static_cast<unsigned long long>(id));
  std::printf("%zu deleted, %zu valid, %llu live bytes\n", deleted.size(), cs.valid_ids().size(),
              static_cast<unsigned long long>(cs.live_bytes()));
  return 0;
}

// Right-skewed rows (shifted gamma at random scales).
std::vector<float> bench_corpus(std::size_t rows, std::size_t dim, uint64_t seed) {
  std::vector<float> data(rows * dim);
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(2.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double scale = 0.05 + 0.5 * unit(rng);
    const double shift = -0.5 * scale * unit(rng);
    for (std::size_t j = 0; j < dim; ++j) data[r * dim + j] = static_cast<float>(shift + scale * gamma(rng));
  }
  return data;
}

int cmd_quant_bench(std::size_t rows, std::size_t dim, uint64_t seed, const std::string& out) {
  if (rows == 0 || dim == 0) throw ConfigError("quant-bench needs rows and dim > 0");
  const auto data = bench_corpus(rows, dim, seed);
  const quant::MatrixView view(data, rows, dim);
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw StoreError("cannot write " + out);
  }
  std::ostream& os = out.empty() ? std::cout : file;
  os << "bits,codec,mean_l2\n";
  std::vector<float> rec(data.size());
  auto emit = [&](int bits, const char* codec) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d,%s,%.9g\n", bits, codec, quant::mean_l2_loss(view, {rec, rows, dim}));
    os << buf;
  };
  for (int bits : {2, 3, 4, 8}) {
    for (auto [mode, name] : {std::pair{quant::RangeMode::symmetric, "symmetric"},
                              std::pair{quant::RangeMode::asymmetric, "asymmetric"}}) {
      for (std::size_t r = 0; r < rows; ++r) {
        const auto row = view.row(r);
        const auto deq = quant::dequantize(quant::quantize(row, quant::uniform_params(row, bits, mode)));
        std::copy(deq.begin(), deq.end(), rec.begin() + static_cast<std::ptrdiff_t>(r * dim));
      }
      emit(bits, name);
    }
    if (bits <= 4) {
      const auto cfg = quant::AdaptiveConfig::defaults_for(bits);
      for (std::size_t r = 0; r < rows; ++r) {
        const auto row = view.row(r);
        const auto deq = quant::dequantize(quant::quantize(row, quant::adaptive_params(row, bits, cfg)));
        std::copy(deq.begin(), deq.end(), rec.begin() + static_cast<std::ptrdiff_t>(r * dim));
      }
      emit(bits, "adaptive");
    }
    for (auto [gran, name] : {std::pair{quant::KMeansGranularity::per_vector, "kmeans_vector"},
                              std::pair{quant::KMeansGranularity::contiguous_blocks, "kmeans_block"}}) {
      quant::KMeansOptions opt;
      opt.bits = bits;
      opt.granularity = gran;
      opt.num_blocks = std::max<std::size_t>(1, rows / 16);
      opt.seed = seed;
      rec = quant::kmeans_quantize(view, opt).reconstruct();
      emit(bits, name);
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Incremental, quantized checkpointing for embedding-table models"};
  app.require_subcommand(1);

  std::string config_path, store_dir, out, run_id = "run";
  std::optional<uint64_t> seed;
  bool timing = false;
  uint64_t keep = 1;
  std::size_t rows = 1000, dim = 64;

  auto* run = app.add_subcommand("run", "Run an experiment from a config file and write its metrics");
  run->add_option("--config", config_path, "Config file (key = value)")->required()->check(CLI::ExistingFile);
  run->add_option("--store", store_dir, "Checkpoint store directory (default: in memory)");
  run->add_option("--out", out, "Write <out>.csv and <out>.json instead of CSV on stdout");
  run->add_option("--seed", seed, "Override the workload seed");
  run->add_flag("--timing", timing, "Include stall and overrun timings (not deterministic)");

  auto* check = app.add_subcommand("restore-check", "Verify the latest valid checkpoint chain and print it");
  check->add_option("--store", store_dir, "Checkpoint store directory")->required();
  check->add_option("--run", run_id, "Run id");

  auto* bench = app.add_subcommand("quant-bench", "Mean l2 loss per codec and bit width on a seeded corpus");
  bench->add_option("--rows", rows, "Corpus vectors");
  bench->add_option("--dim", dim, "Vector length");
  bench->add_option("--seed", seed, "Corpus seed");
  bench->add_option("--out", out, "CSV output file (default: stdout)");

  auto* gc = app.add_subcommand("gc", "Apply count-based retention to a run");
  gc->add_option("--store", store_dir, "Checkpoint store directory")->required();
  gc->add_option("--run", run_id, "Run id");
  gc->add_option("--keep", keep, "Checkpoints to keep (their chains are kept too)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*run) return cmd_run(config_path, store_dir, out, seed, timing);
    if (*check) return cmd_restore_check(store_dir, run_id);
    if (*bench) return cmd_quant_bench(rows, dim, seed.value_or(1), out);
    if (*gc) return cmd_gc(store_dir, run_id, keep);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsageError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return kUsageError;
}
