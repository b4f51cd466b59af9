// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

// Checkpoint layout on an ObjectStore:
//
//   runs/<run>/pending/<id>/shard-XXXX.seg-XXXX   objects of an open checkpoint
//   runs/<run>/pending/<id>/dense.bin
//   runs/<run>/ckpt/<id>/...                      same objects after commit
//   runs/<run>/ckpt/<id>/manifest.json            written last; its presence makes <id> valid
//
// Ids are decimal, zero-padded to 10 digits.

#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "embckpt/store/manifest.hpp"
#include "embckpt/store/object_store.hpp"

namespace embckpt::store {

inline constexpr uint64_t kDefaultSegmentBytes = 4u << 20;

class CheckpointStore;

// An open (pending) checkpoint. Shards may be written from several threads.
class WriteHandle {
 public:
  uint64_t id() const { return id_; }
  bool failed() const;
  bool closed() const;

 private:
  friend class CheckpointStore;
  friend class ShardWriter;

  void record_shard(ShardEntry entry);
  void record_failure();
  void record_object(const std::string& name);

  mutable std::mutex mu_;
  uint64_t id_ = 0;
  Manifest draft_;
  std::set<uint32_t> opened_;
  std::vector<std::string> objects_;  // names relative to the pending prefix
  bool dense_written_ = false;
  bool failed_ = false;
  bool closed_ = false;
};

// Streams one shard's payload into fixed-size segment objects.
class ShardWriter {
 public:
  ShardWriter(ShardWriter&&) = default;
  ~ShardWriter() = default;

  void append(std::span<const uint8_t> bytes);
  /// Flushes the tail segment and records size and checksum in the handle.
  void finish();

 private:
  friend class CheckpointStore;
  ShardWriter(CheckpointStore* store, std::shared_ptr<WriteHandle> handle, uint32_t shard_id);
  void flush_segment();

  CheckpointStore* store_;
  std::shared_ptr<WriteHandle> handle_;
  uint32_t shard_id_;
  Bytes buffer_;
  ShardEntry entry_;
  bool finished_ = false;
};

class CheckpointStore {
 public:
  CheckpointStore(std::shared_ptr<ObjectStore> objects, std::string run_id,
                  uint64_t segment_bytes = kDefaultSegmentBytes);

  const std::string& run_id() const { return run_id_; }
  ObjectStore& objects() { return *objects_; }

  /// Allocates the next id and opens a pending checkpoint. The draft supplies
  /// everything except checkpoint_id, shards and dense. Throws ConflictError
  /// while another checkpoint of this run is open.
  std::shared_ptr<WriteHandle> begin(Manifest draft);

  ShardWriter open_shard(const std::shared_ptr<WriteHandle>& handle, uint32_t shard_id);
  void put_shard(const std::shared_ptr<WriteHandle>& handle, uint32_t shard_id, std::span<const uint8_t> payload);
  void put_dense(const std::shared_ptr<WriteHandle>& handle, std::span<const float> dense);

  /// Publishes the checkpoint. Throws PreconditionError if a shard or the
  /// dense object is missing or a write failed; StoreError if publishing
  /// fails, in which case the checkpoint stays invalid and must be aborted.
  uint64_t commit(const std::shared_ptr<WriteHandle>& handle);
  /// Best-effort removal of everything the handle wrote. Never throws.
  void abort(const std::shared_ptr<WriteHandle>& handle);

  std::optional<uint64_t> latest_valid();
  std::vector<uint64_t> valid_ids();
  /// Throws IntegrityError if the manifest is missing, FormatError if unreadable.
  Manifest load_manifest(uint64_t id);
  /// Manifests to overlay, baseline first. Throws IntegrityError on a broken chain.
  std::vector<Manifest> resolve_chain(uint64_t id);

  /// Concatenated shard payload; IntegrityError on missing segments or checksum mismatch.
  Bytes read_shard(const Manifest& manifest, uint32_t shard_id);
  std::vector<float> read_dense(const Manifest& manifest);
  /// Reads, checksums and parses every object of the chain ending at `id`.
  std::vector<Manifest> verify(uint64_t id);

  /// Keeps the newest keep_last_n valid checkpoints plus everything their
  /// chains reference; returns the deleted valid ids. Also removes debris of
  /// failed checkpoints older than the latest valid one.
  std::vector<uint64_t> gc(uint64_t keep_last_n);

  /// Payload plus dense bytes over all valid checkpoints.
  uint64_t live_bytes();

  std::string pending_prefix(uint64_t id) const;
  std::string ckpt_prefix(uint64_t id) const;

 private:
  friend class ShardWriter;

  std::set<uint64_t> ids_under(const std::string& prefix, bool manifests_only);
  Bytes fetch(const std::string& key);
  void remove_prefix(const std::string& prefix);

  std::shared_ptr<ObjectStore> objects_;
  std::string run_id_;
  uint64_t segment_bytes_;
  std::mutex mu_;  // serializes begin/commit/abort/gc
  std::shared_ptr<WriteHandle> open_;
  uint64_t last_issued_ = 0;
};

std::string format_id(uint64_t id);

}  // namespace embckpt::store
