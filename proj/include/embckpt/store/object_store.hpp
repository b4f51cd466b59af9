// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "embckpt/bytes.hpp"

namespace embckpt::store {

// Flat key/value object store. Keys are '/'-separated UTF-8 paths. put() is
// all-or-nothing per key; implementations must be safe to call concurrently.
class ObjectStore {
 public:
  virtual ~ObjectStore() = default;

  virtual void put(const std::string& key, std::span<const uint8_t> bytes) = 0;
  virtual std::optional<Bytes> get(const std::string& key) = 0;
  /// Keys starting with `prefix`, sorted.
  virtual std::vector<std::string> list(const std::string& prefix) = 0;
  /// Removing a missing key is not an error.
  virtual void remove(const std::string& key) = 0;
};

/// Throws StoreError for empty keys, absolute paths, "." / ".." segments or
/// the reserved ".tmp." marker.
void validate_key(const std::string& key);

// One file per key under a root directory. put() writes a temporary file and
// renames it over the target.
class LocalDirStore final : public ObjectStore {
 public:
  explicit LocalDirStore(std::filesystem::path root);

  void put(const std::string& key, std::span<const uint8_t> bytes) override;
  std::optional<Bytes> get(const std::string& key) override;
  std::vector<std::string> list(const std::string& prefix) override;
  void remove(const std::string& key) override;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  std::atomic<uint64_t> tmp_counter_{0};
};

class MemoryStore final : public ObjectStore {
 public:
  void put(const std::string& key, std::span<const uint8_t> bytes) override;
  std::optional<Bytes> get(const std::string& key) override;
  std::vector<std::string> list(const std::string& prefix) override;
  void remove(const std::string& key) override;

  /// Direct mutable access for corruption tests.
  void corrupt(const std::string& key, std::size_t offset);

 private:
  std::mutex mu_;
  std::map<std::string, Bytes> objects_;
};

enum class FaultKind : uint8_t {
  io_error,  // the one operation fails and is not applied
  crash,     // the operation and every later one fail, as if the process died
};

struct FaultRule {
  uint64_t at_mutation = 0;  // 0-based index among matching put/remove calls after add_rule
  FaultKind kind = FaultKind::io_error;
  std::string key_filter;    // only keys containing this substring count; empty = all
};

// Wraps another store and fails mutations on a schedule.
class FaultInjectingStore final : public ObjectStore {
 public:
  explicit FaultInjectingStore(std::shared_ptr<ObjectStore> inner);

  void add_rule(FaultRule rule);

  void put(const std::string& key, std::span<const uint8_t> bytes) override;
  std::optional<Bytes> get(const std::string& key) override;
  std::vector<std::string> list(const std::string& prefix) override;
  void remove(const std::string& key) override;

  bool crashed() const { return crashed_; }
  uint64_t mutations() const { return mutations_; }
  uint64_t faults_fired() const { return faults_fired_; }
  const std::shared_ptr<ObjectStore>& inner() const { return inner_; }

 private:
  void before_mutation(const std::string& key);
  void check_alive() const;

  std::shared_ptr<ObjectStore> inner_;
  mutable std::mutex mu_;
  std::vector<FaultRule> rules_;
  std::vector<uint64_t> matched_;
  std::atomic<bool> crashed_{false};
  uint64_t mutations_ = 0;
  uint64_t faults_fired_ = 0;
};

}  // namespace embckpt::store
