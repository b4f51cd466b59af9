// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "embckpt/engine.hpp"

#include <algorithm>
#include <exception>

#include "embckpt/error.hpp"
#include "embckpt/store/payload.hpp"

namespace embckpt::engine {

using store::PayloadMode;
using store::SectionHeader;

namespace {

constexpr std::size_t kSnapshotPoolSize = 4;

}  // namespace

void RunConfig::validate() const {
  if (checkpoint_interval < 1) throw ConfigError("checkpoint interval must be at least 1 batch");
  if (chunk_rows < 1) throw ConfigError("chunk_rows must be at least 1");
  if (workers < 1) throw ConfigError("need at least one worker");
  if (bits && !(*bits == kFullPrecisionBits || (*bits >= 1 && *bits <= 8))) {
    throw ConfigError("bit width must be 1..8 or 32");
  }
  if (adaptive) adaptive->validate();
  failure.validate();
}

int RunConfig::initial_bits() const {
  if (!quantize) return kFullPrecisionBits;
  if (bits) return *bits;
  return select_bitwidth(expected_failures(failure));
}

std::string_view to_string(JobState state) {
  switch (state) {
    case JobState::optimizing: return "optimizing";
    case JobState::writing: return "writing";
    case JobState::committed: return "committed";
    case JobState::aborted: return "aborted";
  }
  return "?";
}

bool CheckpointJob::terminal() const {
  const auto s = state();
  return s == JobState::committed || s == JobState::aborted;
}

const JobResult& CheckpointJob::wait() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [&] { return terminal(); });
  return result_;
}

void CheckpointJob::set_state(JobState s) {
  {
    std::lock_guard lock(mu_);
    result_.state = s;
    state_.store(s);
  }
  cv_.notify_all();
}

Restored restore_id(store::CheckpointStore& cs, uint64_t id) {
  const auto chain = cs.resolve_chain(id);
  const auto& base = chain.front();
  const auto& last = chain.back();
  const ModelConfig config = base.model_config();
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("baseline describes an invalid model: ") + e.what());
  }
  for (const auto& m : chain) {
    if (m.tables != base.tables || m.num_shards != base.num_shards || m.has_aux != base.has_aux ||
        m.dense_size != base.dense_size) {
      throw FormatError("checkpoint " + std::to_string(m.checkpoint_id) + " has a different model layout");
    }
  }

  Restored out;
  out.model.config = config;
  for (uint32_t t = 0; t < config.num_tables(); ++t) {
    const uint64_t rows = config.rows_per_table[t];
    out.model.tables.push_back({t, rows, config.dim, std::vector<float>(rows * config.dim),
                                config.has_aux_state ? std::vector<float>(rows * config.dim) : std::vector<float>{}});
  }
  std::vector<DirtyBitmap> since;
  for (uint32_t t = 0; t < config.num_tables(); ++t) {
    since.emplace_back(t, config.rows_per_table[t], TrackScope::since_baseline);
  }

  for (const auto& m : chain) {
    const bool incremental = m.kind == CheckpointKind::incremental;
    std::vector<int> seen(config.num_tables(), 0);
    for (uint32_t s = 0; s < m.num_shards; ++s) {
      for (const auto& section : store::parse_payload(cs.read_shard(m, s), incremental)) {
        const uint32_t t = section.header.table_id;
        if (t >= config.num_tables() || config.shard_of(t) != s) {
          throw FormatError("shard " + std::to_string(s) + " holds foreign table " + std::to_string(t));
        }
        store::apply_section(section, incremental, out.model.tables[t]);
        if (incremental) since[t].mark(section.row_index);
        ++seen[t];
      }
    }
    if (std::any_of(seen.begin(), seen.end(), [](int n) { return n != 1; })) {
      throw FormatError("checkpoint " + std::to_string(m.checkpoint_id) + " does not cover every table once");
    }
    out.chain.push_back(m.checkpoint_id);
  }
  out.model.dense = cs.read_dense(last);
  out.model.reader = last.reader;
  out.tracker = Tracker(config);
  out.tracker.set_since_baseline(std::move(since));
  out.policy = PolicyState{last.policy, true, IntervalHistory{last.history}};
  out.checkpoint_id = last.checkpoint_id;
  out.bits = last.bits;
  return out;
}

Restored restore(store::CheckpointStore& cs, bool fallback) {
  const auto ids = cs.valid_ids();
  if (ids.empty()) throw PreconditionError("run " + cs.run_id() + " has no valid checkpoint");
  for (auto it = ids.rbegin(); it != ids.rend(); ++it) {
    try {
      return restore_id(cs, *it);
    } catch (const IntegrityError&) {
      if (!fallback || std::next(it) == ids.rend()) throw;
    } catch (const FormatError&) {
      if (!fallback || std::next(it) == ids.rend()) throw;
    }
  }
  throw PreconditionError("unreachable");
}

Engine::Engine(RunConfig config, std::shared_ptr<store::CheckpointStore> store)
    : config_(std::move(config)), store_(std::move(store)) {
  config_.validate();
  if (!store_) throw ConfigError("engine needs a checkpoint store");
  bits_ = config_.initial_bits();
  policy_.policy = config_.policy;
}

Engine::~Engine() {
  if (worker_.joinable()) worker_.join();
}

void Engine::set_bits(int bits) {
  if (!(bits == kFullPrecisionBits || (bits >= 1 && bits <= 8))) throw ConfigError("bit width must be 1..8 or 32");
  bits_ = bits;
}

void Engine::settle(Tracker* tracker) {
  if (!current_) return;
  const JobResult& r = current_->wait();
  if (worker_.joinable()) worker_.join();
  if (r.state == JobState::committed) {
    last_committed_ = r.checkpoint_id;
    if (r.kind == CheckpointKind::full) baseline_ = r.checkpoint_id;
  } else {
    policy_ = current_->policy_before_;
    if (tracker) tracker->reinstate(current_->view_);
  }
  {
    std::lock_guard lock(results_mu_);
    results_.push_back(r);
  }
  current_.reset();
}

void Engine::drain(Tracker& tracker) { settle(&tracker); }

std::vector<JobResult> Engine::results() const {
  std::lock_guard lock(results_mu_);
  return results_;
}

std::shared_ptr<CheckpointJob> Engine::on_interval_end(ModelState& model, Tracker& tracker) {
  if (current_) {
    if (!current_->terminal()) ++overruns_;
    settle(&tracker);
  }

  const auto t0 = std::chrono::steady_clock::now();
  auto job = std::make_shared<CheckpointJob>();
  std::shared_ptr<ModelSnapshot> buffer;
  for (const auto& b : snapshot_pool_) {
    if (b.use_count() == 1) buffer = b;
  }
  if (!buffer) {
    buffer = std::make_shared<ModelSnapshot>();
    if (snapshot_pool_.size() < kSnapshotPoolSize) snapshot_pool_.push_back(buffer);
  }
  snapshot_into(model, *buffer);
  job->snapshot_ = buffer;
  job->view_ = tracker.view();
  job->policy_before_ = policy_;
  job->plan_ = policy_.next(job->view_, model.config, bits_);
  if (job->plan_.kind == CheckpointKind::full) {
    tracker.reset_baseline();
  } else {
    tracker.reset_interval();
  }
  const auto stall = std::chrono::steady_clock::now() - t0;

  const auto& plan = job->plan_;
  if (plan.kind == CheckpointKind::incremental && (!baseline_ || !last_committed_)) {
    throw PreconditionError("incremental checkpoint without a committed baseline");
  }
  auto& d = job->draft_;
  d.kind = plan.kind;
  if (plan.kind == CheckpointKind::incremental) {
    d.base_id = baseline_;
    d.parent_id = last_committed_;
  }
  d.policy = config_.policy;
  d.bits = plan.bits;
  d.snapshot_batch = model.reader.batches_consumed;
  d.reader = model.reader;
  d.num_shards = model.config.num_shards;
  d.has_aux = model.config.has_aux_state;
  d.dense_size = static_cast<uint32_t>(model.dense.size());
  for (uint32_t t = 0; t < model.config.num_tables(); ++t) {
    d.tables.push_back({t, model.config.rows_per_table[t], model.config.dim, model.config.shard_of(t)});
  }
  d.history = policy_.history.sizes;
  d.payload_rows = plan.row_count(model.config);

  uint64_t dirty = 0;
  for (const auto& b : job->view_.interval) dirty += b.count();
  auto& r = job->result_;
  r.sequence = sequence_++;
  r.snapshot_batch = d.snapshot_batch;
  r.kind = plan.kind;
  r.bits = plan.bits;
  r.payload_rows = d.payload_rows;
  r.dirty_fraction = static_cast<double>(dirty) / static_cast<double>(model.config.total_rows());
  r.stall = std::chrono::duration_cast<std::chrono::nanoseconds>(stall);

  const uint64_t active = ++active_;
  uint64_t seen = max_active_.load();
  while (active > seen && !max_active_.compare_exchange_weak(seen, active)) {
  }
  current_ = job;
  worker_ = std::thread([this, job] { run_job(*job); });
  return job;
}

void Engine::run_job(CheckpointJob& job) {
  auto& r = job.result_;
  std::shared_ptr<store::WriteHandle> handle;
  JobState final_state = JobState::committed;
  try {
    handle = store_->begin(job.draft_);
    job.set_state(JobState::writing);

    const ModelSnapshot& snap = *job.snapshot_;
    const CheckpointPlan& plan = job.plan_;
    const bool incremental = plan.kind == CheckpointKind::incremental;
    const PayloadMode mode = plan.bits == kFullPrecisionBits ? PayloadMode::fp32 : PayloadMode::quantized;
    const quant::AdaptiveConfig* adaptive = config_.adaptive ? &*config_.adaptive : nullptr;
    const uint64_t chunk = config_.chunk_rows;
    std::atomic<uint64_t> shard_bytes{0};

    auto encode_shard = [&](uint32_t s) {
      auto writer = store_->open_shard(handle, s);
      Bytes buf;
      for (const auto& table : snap.shards[s].tables) {
        const auto& rows = incremental ? plan.rows.at(table.table_id) : std::vector<uint64_t>{};
        const uint64_t count = incremental ? rows.size() : table.rows;
        const SectionHeader h{table.table_id, count, table.dim, static_cast<uint8_t>(plan.bits), mode,
                              table.has_aux()};
        buf.clear();
        store::encode_header(h, buf);
        writer.append(buf);
        for (uint64_t first = 0; first < count; first += chunk) {
          const uint64_t n = std::min(chunk, count - first);
          buf.clear();
          if (incremental) {
            store::encode_rows(table, std::span(rows).subspan(first, n), h, true, buf, adaptive);
          } else {
            store::encode_row_range(table, first, n, h, false, buf, adaptive);
          }
          writer.append(buf);
          shard_bytes += buf.size();
        }
        shard_bytes += store::kSectionHeaderBytes;
      }
      writer.finish();
    };

    const uint32_t shards = static_cast<uint32_t>(snap.shards.size());
    const uint32_t workers = std::min(config_.workers, shards);
    if (workers <= 1) {
      for (uint32_t s = 0; s < shards; ++s) encode_shard(s);
    } else {
      std::vector<std::exception_ptr> errors(workers);
      std::vector<std::thread> pool;
      for (uint32_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (uint32_t s = w; s < shards; s += workers) encode_shard(s);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
      for (auto& t : pool) t.join();
      for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
      }
    }
    store_->put_dense(handle, snap.dense);
    r.checkpoint_id = store_->commit(handle);
    r.payload_bytes = shard_bytes + snap.dense.size() * sizeof(float);

    // Committed; retention problems do not invalidate the checkpoint.
    try {
      store_->gc(config_.keep_last_n);
      r.live_bytes = store_->live_bytes();
    } catch (const std::exception& e) {
      r.error = std::string("retention: ") + e.what();
    }
  } catch (const std::exception& e) {
    r.error = e.what();
    r.checkpoint_id.reset();
    if (handle) store_->abort(handle);
    final_state = JobState::aborted;
  }
  --active_;
  job.set_state(final_state);
}

Restored Engine::restore(bool fallback) {
  if (current_) {
    current_->wait();
    if (worker_.joinable()) worker_.join();
    {
      std::lock_guard lock(results_mu_);
      results_.push_back(current_->result_);
    }
    current_.reset();
  }
  Restored r = engine::restore(*store_, fallback);
  adopt(r);
  return r;
}

void Engine::adopt(const Restored& restored) {
  policy_ = restored.policy;
  policy_.policy = config_.policy;
  last_committed_ = restored.checkpoint_id;
  baseline_ = restored.chain.front();
}

}  // namespace embckpt::engine
