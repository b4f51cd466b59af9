// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "embckpt/store/checkpoint_store.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <map>

#include "embckpt/crc32c.hpp"
#include "embckpt/store/payload.hpp"

namespace embckpt::store {

namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kDenseName = "dense.bin";

std::string segment_name(uint32_t shard, uint32_t segment) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "shard-%04u.seg-%04u", shard, segment);
  return buf;
}

}  // namespace

std::string format_id(uint64_t id) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%010llu", static_cast<unsigned long long>(id));
  return buf;
}

bool WriteHandle::failed() const {
  std::lock_guard lock(mu_);
  return failed_;
}

bool WriteHandle::closed() const {
  std::lock_guard lock(mu_);
  return closed_;
}

void WriteHandle::record_shard(ShardEntry entry) {
  std::lock_guard lock(mu_);
  draft_.shards.push_back(std::move(entry));
}

void WriteHandle::record_failure() {
  std::lock_guard lock(mu_);
  failed_ = true;
}

void WriteHandle::record_object(const std::string& name) {
  std::lock_guard lock(mu_);
  objects_.push_back(name);
}

ShardWriter::ShardWriter(CheckpointStore* store, std::shared_ptr<WriteHandle> handle, uint32_t shard_id)
    : store_(store), handle_(std::move(handle)), shard_id_(shard_id) {
  entry_.shard_id = shard_id;
}

void ShardWriter::append(std::span<const uint8_t> bytes) {
  if (finished_) throw PreconditionError("shard writer already finished");
  entry_.crc32c = crc32c(bytes, entry_.crc32c);
  entry_.bytes += bytes.size();
  while (!bytes.empty()) {
    const std::size_t room = store_->segment_bytes_ - buffer_.size();
    const std::size_t n = std::min(room, bytes.size());
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(n));
    bytes = bytes.subspan(n);
    if (buffer_.size() == store_->segment_bytes_) flush_segment();
  }
}

void ShardWriter::flush_segment() {
  const std::string name = segment_name(shard_id_, static_cast<uint32_t>(entry_.keys.size()));
  handle_->record_object(name);
  try {
    store_->objects_->put(store_->pending_prefix(handle_->id()) + name, buffer_);
  } catch (...) {
    handle_->record_failure();
    throw;
  }
  entry_.keys.push_back(name);
  buffer_.clear();
}

void ShardWriter::finish() {
  if (finished_) throw PreconditionError("shard writer already finished");
  if (!buffer_.empty()) flush_segment();
  finished_ = true;
  handle_->record_shard(std::move(entry_));
}

CheckpointStore::CheckpointStore(std::shared_ptr<ObjectStore> objects, std::string run_id,
                                 uint64_t segment_bytes)
    : objects_(std::move(objects)), run_id_(std::move(run_id)), segment_bytes_(segment_bytes) {
  if (!objects_) throw ConfigError("checkpoint store needs an object store");
  if (run_id_.empty() || run_id_.find('/') != std::string::npos) throw ConfigError("invalid run id '" + run_id_ + "'");
  if (segment_bytes_ == 0) throw ConfigError("segment size must be positive");
}

std::string CheckpointStore::pending_prefix(uint64_t id) const {
  return "runs/" + run_id_ + "/pending/" + format_id(id) + "/";
}

std::string CheckpointStore::ckpt_prefix(uint64_t id) const {
  return "runs/" + run_id_ + "/ckpt/" + format_id(id) + "/";
}

std::set<uint64_t> CheckpointStore::ids_under(const std::string& prefix, bool manifests_only) {
  std::set<uint64_t> ids;
  for (const auto& key : objects_->list(prefix)) {
    const std::string_view rest(key.data() + prefix.size(), key.size() - prefix.size());
    const auto slash = rest.find('/');
    if (slash == std::string_view::npos) continue;
    uint64_t id = 0;
    const auto [end, ec] = std::from_chars(rest.data(), rest.data() + slash, id);
    if (ec != std::errc() || end != rest.data() + slash) continue;
    if (manifests_only && rest.substr(slash + 1) != kManifestName) continue;
    ids.insert(id);
  }
  return ids;
}

std::shared_ptr<WriteHandle> CheckpointStore::begin(Manifest draft) {
  std::lock_guard lock(mu_);
  if (open_ && !open_->closed()) {
    throw ConflictError("checkpoint " + std::to_string(open_->id()) + " of run " + run_id_ + " is still open");
  }
  uint64_t next = last_issued_ + 1;
  for (const char* area : {"/pending/", "/ckpt/"}) {
    const auto ids = ids_under("runs/" + run_id_ + area, false);
    if (!ids.empty()) next = std::max(next, *ids.rbegin() + 1);
  }
  auto handle = std::make_shared<WriteHandle>();
  handle->id_ = next;
  draft.run_id = run_id_;
  draft.checkpoint_id = next;
  draft.shards.clear();
  draft.dense = {};
  handle->draft_ = std::move(draft);
  last_issued_ = next;
  open_ = handle;
  return handle;
}

ShardWriter CheckpointStore::open_shard(const std::shared_ptr<WriteHandle>& handle, uint32_t shard_id) {
  {
    std::lock_guard lock(handle->mu_);
    if (handle->closed_) throw PreconditionError("checkpoint handle is closed");
    if (shard_id >= handle->draft_.num_shards) {
      throw PreconditionError("shard " + std::to_string(shard_id) + " outside the manifest");
    }
    if (!handle->opened_.insert(shard_id).second) {
      throw PreconditionError("shard " + std::to_string(shard_id) + " already written");
    }
  }
  return ShardWriter(this, handle, shard_id);
}

void CheckpointStore::put_shard(const std::shared_ptr<WriteHandle>& handle, uint32_t shard_id,
                                std::span<const uint8_t> payload) {
  auto writer = open_shard(handle, shard_id);
  writer.append(payload);
  writer.finish();
}

void CheckpointStore::put_dense(const std::shared_ptr<WriteHandle>& handle, std::span<const float> dense) {
  {
    std::lock_guard lock(handle->mu_);
    if (handle->closed_) throw PreconditionError("checkpoint handle is closed");
    if (handle->dense_written_) throw PreconditionError("dense parameters already written");
    handle->dense_written_ = true;
  }
  const Bytes bytes = encode_dense(dense);
  handle->record_object(kDenseName);
  try {
    objects_->put(pending_prefix(handle->id()) + kDenseName, bytes);
  } catch (...) {
    handle->record_failure();
    throw;
  }
  std::lock_guard lock(handle->mu_);
  handle->draft_.dense = {kDenseName, bytes.size(), crc32c(bytes)};
}

uint64_t CheckpointStore::commit(const std::shared_ptr<WriteHandle>& handle) {
  std::lock_guard lock(mu_);
  Manifest manifest;
  std::vector<std::string> objects;
  {
    std::lock_guard hl(handle->mu_);
    if (handle->closed_) throw PreconditionError("checkpoint handle is closed");
    if (handle->failed_) throw PreconditionError("a write of this checkpoint failed; abort it");
    if (!handle->dense_written_ || handle->draft_.dense.key.empty()) {
      throw PreconditionError("dense parameters not written");
    }
    if (handle->draft_.shards.size() != handle->draft_.num_shards) {
      throw PreconditionError("only " + std::to_string(handle->draft_.shards.size()) + " of " +
                              std::to_string(handle->draft_.num_shards) + " shards written");
    }
    manifest = handle->draft_;
    objects = handle->objects_;
  }
  std::sort(manifest.shards.begin(), manifest.shards.end(),
            [](const ShardEntry& a, const ShardEntry& b) { return a.shard_id < b.shard_id; });

  const uint64_t id = handle->id();
  const std::string from = pending_prefix(id);
  const std::string to = ckpt_prefix(id);
  for (const auto& name : objects) {
    auto bytes = objects_->get(from + name);
    if (!bytes) throw StoreError("pending object " + from + name + " vanished");
    objects_->put(to + name, *bytes);
  }
  objects_->put(to + kManifestName, as_bytes(to_json(manifest)));

  // Committed. Leftover pending objects are only debris from here on.
  {
    std::lock_guard hl(handle->mu_);
    handle->closed_ = true;
  }
  try {
    for (const auto& name : objects) objects_->remove(from + name);
  } catch (const Error&) {
  }
  return id;
}

void CheckpointStore::abort(const std::shared_ptr<WriteHandle>& handle) {
  std::lock_guard lock(mu_);
  std::vector<std::string> objects;
  {
    std::lock_guard hl(handle->mu_);
    if (handle->closed_) return;
    handle->closed_ = true;
    objects = handle->objects_;
  }
  const uint64_t id = handle->id();
  for (const auto& name : objects) {
    try {
      objects_->remove(ckpt_prefix(id) + name);
    } catch (const Error&) {
    }
    try {
      objects_->remove(pending_prefix(id) + name);
    } catch (const Error&) {
    }
  }
}

std::optional<uint64_t> CheckpointStore::latest_valid() {
  const auto ids = ids_under("runs/" + run_id_ + "/ckpt/", true);
  if (ids.empty()) return std::nullopt;
  return *ids.rbegin();
}

std::vector<uint64_t> CheckpointStore::valid_ids() {
  const auto ids = ids_under("runs/" + run_id_ + "/ckpt/", true);
  return {ids.begin(), ids.end()};
}

Bytes CheckpointStore::fetch(const std::string& key) {
  auto bytes = objects_->get(key);
  if (!bytes) throw IntegrityError("missing object " + key);
  return std::move(*bytes);
}

Manifest CheckpointStore::load_manifest(uint64_t id) {
  Manifest m = parse_manifest(fetch(ckpt_prefix(id) + kManifestName));
  if (m.checkpoint_id != id || m.run_id != run_id_) {
    throw FormatError("manifest at " + ckpt_prefix(id) + " describes a different checkpoint");
  }
  return m;
}

std::vector<Manifest> CheckpointStore::resolve_chain(uint64_t id) {
  std::vector<Manifest> chain{load_manifest(id)};
  if (chain.back().kind == CheckpointKind::full) return chain;
  const uint64_t base = *chain.back().base_id;
  if (chain.back().policy == PolicyKind::consecutive_increment) {
    // Every increment since the baseline is needed; walk the parent links.
    while (*chain.back().parent_id != base) {
      const uint64_t parent = *chain.back().parent_id;
      if (parent >= chain.back().checkpoint_id || parent <= base) {
        throw IntegrityError("checkpoint " + std::to_string(chain.back().checkpoint_id) + " has a bad parent link");
      }
      chain.push_back(load_manifest(parent));
      if (chain.back().kind != CheckpointKind::incremental || chain.back().base_id != base) {
        throw IntegrityError("checkpoint chain of " + std::to_string(id) + " changes baseline");
      }
    }
  }
  chain.push_back(load_manifest(base));
  if (chain.back().kind != CheckpointKind::full) {
    throw IntegrityError("base " + std::to_string(base) + " is not a full checkpoint");
  }
  std::reverse(chain.begin(), chain.end());
  return chain;
}

Bytes CheckpointStore::read_shard(const Manifest& m, uint32_t shard_id) {
  const ShardEntry* entry = m.shard(shard_id);
  if (!entry) throw IntegrityError("manifest " + std::to_string(m.checkpoint_id) + " has no shard " + std::to_string(shard_id));
  Bytes out;
  out.reserve(entry->bytes);
  for (const auto& name : entry->keys) {
    const Bytes seg = fetch(ckpt_prefix(m.checkpoint_id) + name);
    out.insert(out.end(), seg.begin(), seg.end());
  }
  if (out.size() != entry->bytes || crc32c(out) != entry->crc32c) {
    throw IntegrityError("checksum mismatch in checkpoint " + std::to_string(m.checkpoint_id) + " shard " +
                         std::to_string(shard_id));
  }
  return out;
}

std::vector<float> CheckpointStore::read_dense(const Manifest& m) {
  const Bytes bytes = fetch(ckpt_prefix(m.checkpoint_id) + m.dense.key);
  if (bytes.size() != m.dense.bytes || crc32c(bytes) != m.dense.crc32c) {
    throw IntegrityError("checksum mismatch in checkpoint " + std::to_string(m.checkpoint_id) + " dense object");
  }
  return decode_dense(bytes, m.dense_size);
}

std::vector<Manifest> CheckpointStore::verify(uint64_t id) {
  auto chain = resolve_chain(id);
  for (const auto& m : chain) {
    const bool incremental = m.kind == CheckpointKind::incremental;
    for (uint32_t s = 0; s < m.num_shards; ++s) parse_payload(read_shard(m, s), incremental);
    read_dense(m);
  }
  return chain;
}

void CheckpointStore::remove_prefix(const std::string& prefix) {
  // Manifest first so a half-deleted checkpoint is never valid.
  const auto keys = objects_->list(prefix);
  for (const auto& key : keys) {
    if (key.ends_with(std::string("/") + kManifestName)) objects_->remove(key);
  }
  for (const auto& key : keys) {
    if (!key.ends_with(std::string("/") + kManifestName)) objects_->remove(key);
  }
}

std::vector<uint64_t> CheckpointStore::gc(uint64_t keep_last_n) {
  std::lock_guard lock(mu_);
  const auto valid = valid_ids();
  std::set<uint64_t> keep;
  const std::size_t first_kept = valid.size() > keep_last_n ? valid.size() - keep_last_n : 0;
  for (std::size_t i = first_kept; i < valid.size(); ++i) {
    keep.insert(valid[i]);
    // A chain that cannot be resolved keeps whatever of it still exists.
    try {
      for (const auto& m : resolve_chain(valid[i])) keep.insert(m.checkpoint_id);
    } catch (const Error&) {
      for (uint64_t id : valid) {
        if (id < valid[i]) keep.insert(id);
      }
    }
  }
  std::vector<uint64_t> deleted;
  for (uint64_t id : valid) {
    if (keep.count(id)) continue;
    remove_prefix(ckpt_prefix(id));
    deleted.push_back(id);
  }
  if (!valid.empty()) {
    const uint64_t newest = valid.back();
    const uint64_t in_flight = open_ && !open_->closed() ? open_->id() : 0;
    for (uint64_t id : ids_under("runs/" + run_id_ + "/ckpt/", false)) {
      if (id < newest && !std::binary_search(valid.begin(), valid.end(), id) && id != in_flight) {
        remove_prefix(ckpt_prefix(id));
      }
    }
    for (uint64_t id : ids_under("runs/" + run_id_ + "/pending/", false)) {
      if (id < newest && id != in_flight) remove_prefix(pending_prefix(id));
    }
  }
  return deleted;
}

uint64_t CheckpointStore::live_bytes() {
  uint64_t total = 0;
  for (uint64_t id : valid_ids()) total += load_manifest(id).stored_bytes();
  return total;
}

}  // namespace embckpt::store
