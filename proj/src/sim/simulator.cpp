// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "embckpt/sim/simulator.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <deque>
#include <json.hpp>

#include "embckpt/error.hpp"
#include "embckpt/quant/matrix.hpp"
#include "embckpt/store/payload.hpp"

namespace embckpt::sim {

namespace {

using Clock = std::chrono::steady_clock;

int64_t ns_since(Clock::time_point t0) {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now() - t0).count();
}

double mean_row_l2(const ModelState& model, const ModelSnapshot& exact) {
  double weighted = 0.0;
  uint64_t rows = 0;
  for (const auto& t : model.tables) {
    const auto& ref = exact.table(t.table_id);
    weighted += quant::mean_l2_loss({ref.values, ref.rows, ref.dim}, {t.values, t.rows, t.dim}) *
                static_cast<double>(t.rows);
    rows += t.rows;
  }
  return rows == 0 ? 0.0 : weighted / static_cast<double>(rows);
}

uint64_t fold(uint64_t h, uint64_t v) {
  for (int i = 0; i < 8; ++i) {
    h ^= (v >> (8 * i)) & 0xff;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

void validate_schedule(const std::vector<FailurePoint>& schedule, const WorkloadConfig& w) {
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto& f = schedule[i];
    if (f.offset >= w.batches_per_interval) throw ConfigError("failure offset must be below batches_per_interval");
    if (f.interval >= w.num_intervals) throw ConfigError("failure interval beyond the run");
    if (i > 0) {
      const auto& p = schedule[i - 1];
      if (std::pair(f.interval, f.offset) <= std::pair(p.interval, p.offset)) {
        throw ConfigError("failure schedule must be strictly increasing");
      }
    }
  }
}

uint64_t full_checkpoint_bytes(const ModelConfig& config) {
  uint64_t n = 0;
  for (uint64_t rows : config.rows_per_table) {
    const store::SectionHeader h{0, rows, config.dim, 32, store::PayloadMode::fp32, config.has_aux_state};
    n += h.section_bytes(false);
  }
  return n + uint64_t{config.dense_size} * sizeof(float);
}

double MetricsReport::stall_fraction() const {
  return train_ns > 0 ? static_cast<double>(stall_ns) / static_cast<double>(train_ns) : 0.0;
}

const std::vector<std::string>& csv_columns(bool timing) {
  static const std::vector<std::string> base{
      "sequence",      "interval",   "kind",           "bits",       "state",         "checkpoint_id",
      "payload_rows",  "payload_bytes", "payload_fraction", "live_bytes", "dirty_fraction"};
  static const std::vector<std::string> timed = [] {
    auto c = base;
    c.push_back("stall_ns");
    return c;
  }();
  return timing ? timed : base;
}

void MetricsReport::write_csv(std::ostream& out) const {
  const auto& cols = csv_columns(timing);
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
  for (const auto& m : intervals) {
    out << m.sequence << ',' << m.interval << ',' << m.kind << ',' << m.bits << ',' << m.state << ','
        << m.checkpoint_id << ',' << m.payload_rows << ',' << m.payload_bytes << ',' << fmt(m.payload_fraction)
        << ',' << m.live_bytes << ',' << fmt(m.dirty_fraction);
    if (timing) out << ',' << m.stall_ns;
    out << "\n";
  }
}

void MetricsReport::write_json(std::ostream& out) const {
  using nlohmann::ordered_json;
  ordered_json j;
  j["run_id"] = run_id;
  j["policy"] = policy;
  j["full_fp32_bytes"] = full_fp32_bytes;
  j["selected_bits"] = selected_bits;
  j["final_bits"] = final_bits;
  j["resumes"] = resumes;
  j["restore_perturbation"] = restore_perturbation;
  j["bandwidth_reduction"] = bandwidth_reduction;
  j["capacity_reduction"] = capacity_reduction;
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(final_model_hash));
  j["final_model_hash"] = hash;
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(lineage_hash));
  j["lineage_hash"] = hash;
  j["exactly_once"] = exactly_once;
  if (timing) {
    j["overruns"] = overruns;
    j["train_ns"] = train_ns;
    j["stall_ns"] = stall_ns;
    j["stall_fraction"] = stall_fraction();
  }
  j["intervals"] = ordered_json::array();
  for (const auto& m : intervals) {
    ordered_json row;
    row["sequence"] = m.sequence;
    row["interval"] = m.interval;
    row["kind"] = m.kind;
    row["bits"] = m.bits;
    row["state"] = m.state;
    row["checkpoint_id"] = m.checkpoint_id;
    row["payload_rows"] = m.payload_rows;
    row["payload_bytes"] = m.payload_bytes;
    row["payload_fraction"] = m.payload_fraction;
    row["live_bytes"] = m.live_bytes;
    row["dirty_fraction"] = m.dirty_fraction;
    if (timing) row["stall_ns"] = m.stall_ns;
    j["intervals"].push_back(std::move(row));
  }
  out << j.dump(2) << "\n";
}

ModelState train_uninterrupted(const WorkloadConfig& workload) {
  const Workload w(workload);
  ModelState model = init_model(workload.model, workload.seed);
  Tracker tracker(workload.model);
  for (uint64_t b = 0; b < workload.total_batches(); ++b) apply_batch(w.generate(b), model, tracker);
  return model;
}

MetricsReport run(const WorkloadConfig& workload, const engine::RunConfig& run_config,
                  const std::vector<FailurePoint>& schedule, std::shared_ptr<store::CheckpointStore> store,
                  const SimOptions& options) {
  const Workload w(workload);
  validate_schedule(schedule, workload);
  run_config.validate();

  MetricsReport report;
  report.run_id = store->run_id();
  report.policy = std::string(to_string(run_config.policy));
  report.full_fp32_bytes = full_checkpoint_bytes(workload.model);
  report.timing = options.timing;

  auto engine = std::make_unique<engine::Engine>(run_config, store);
  const int selected = engine->bits();
  report.selected_bits = selected;

  ModelState model = init_model(workload.model, workload.seed);
  Tracker tracker(workload.model);
  std::vector<std::pair<uint64_t, uint64_t>> lineage;  // (batch, hash) in the surviving history
  // Exact model behind recently committed checkpoints, for measuring restore error.
  std::deque<std::shared_ptr<engine::CheckpointJob>> recent;
  std::vector<engine::JobResult> results;

  const uint64_t total = workload.total_batches();
  const uint64_t bpi = workload.batches_per_interval;
  std::size_t next_failure = 0;
  const auto t0 = Clock::now();
  uint64_t b = 0;
  while (b < total) {
    if (next_failure < schedule.size() &&
        b == schedule[next_failure].interval * bpi + schedule[next_failure].offset) {
      ++next_failure;
      // The in-flight checkpoint finishes or fails before the process dies.
      engine->drain(tracker);
      ++report.resumes;
      if (!store->latest_valid()) {
        model = init_model(workload.model, workload.seed);
        tracker = Tracker(workload.model);
        const auto done = engine->results();
        results.insert(results.end(), done.begin(), done.end());
        report.overruns += engine->overruns();
        engine = std::make_unique<engine::Engine>(run_config, store);
      } else {
        auto restored = engine->restore(run_config.restore_fallback);
        for (const auto& job : recent) {
          if (job->wait().checkpoint_id == restored.checkpoint_id) {
            report.restore_perturbation += mean_row_l2(restored.model, *job->snapshot());
          }
        }
        model = std::move(restored.model);
        tracker = std::move(restored.tracker);
      }
      if (run_config.quantize && !run_config.bits) {
        engine->set_bits(fallback_check(report.resumes, selected));
      }
      b = model.reader.batches_consumed;
      while (!lineage.empty() && lineage.back().first >= b) lineage.pop_back();
      continue;
    }

    const Batch batch = w.generate(b);
    apply_batch(batch, model, tracker);
    lineage.emplace_back(b, batch_hash(batch));
    ++b;
    if (b % bpi == 0) {
      recent.push_back(engine->on_interval_end(model, tracker));
      while (recent.size() > 2) recent.pop_front();
    }
  }
  engine->drain(tracker);
  report.train_ns = ns_since(t0);
  report.final_bits = engine->bits();
  report.overruns += engine->overruns();
  const auto done = engine->results();
  results.insert(results.end(), done.begin(), done.end());
  recent.clear();

  double full_written = 0.0, actual_written = 0.0;
  uint64_t max_full_live = 0, max_live = 0, committed = 0;
  for (const auto& r : results) {
    IntervalMetrics m;
    m.sequence = report.intervals.size();
    m.interval = r.snapshot_batch / bpi - 1;
    m.kind = std::string(to_string(r.kind));
    m.bits = r.bits;
    m.state = std::string(engine::to_string(r.state));
    m.checkpoint_id = r.checkpoint_id.value_or(0);
    m.dirty_fraction = r.dirty_fraction;
    m.stall_ns = r.stall.count();
    report.stall_ns += m.stall_ns;
    full_written += static_cast<double>(report.full_fp32_bytes);
    if (r.state == engine::JobState::committed) {
      ++committed;
      m.payload_rows = r.payload_rows;
      m.payload_bytes = r.payload_bytes;
      m.live_bytes = r.live_bytes;
      actual_written += static_cast<double>(r.payload_bytes);
    }
    m.payload_fraction = static_cast<double>(m.payload_bytes) / static_cast<double>(report.full_fp32_bytes);
    max_live = std::max(max_live, m.live_bytes);
    max_full_live = std::max(max_full_live, report.full_fp32_bytes * std::min(committed, run_config.keep_last_n));
    report.intervals.push_back(m);
  }
  report.bandwidth_reduction = actual_written > 0.0 ? full_written / actual_written : 0.0;
  report.capacity_reduction =
      max_live > 0 ? static_cast<double>(max_full_live) / static_cast<double>(max_live) : 0.0;

  report.final_model_hash = model_hash(model);
  uint64_t h = 0xcbf29ce484222325ull;
  bool once = lineage.size() == total;
  for (std::size_t i = 0; i < lineage.size(); ++i) {
    once = once && lineage[i].first == i;
    h = fold(h, lineage[i].second);
  }
  report.lineage_hash = h;
  report.exactly_once = once;
  if (options.final_model) *options.final_model = std::move(model);
  return report;
}

}  // namespace embckpt::sim
