// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "embckpt/store/object_store.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <system_error>

namespace embckpt::store {

namespace fs = std::filesystem;

void validate_key(const std::string& key) {
  if (key.empty() || key.front() == '/' || key.back() == '/') {
    throw StoreError("invalid object key '" + key + "'");
  }
  if (key.find(".tmp.") != std::string::npos) throw StoreError("object key uses reserved '.tmp.'");
  std::size_t start = 0;
  while (start <= key.size()) {
    const std::size_t end = std::min(key.find('/', start), key.size());
    const std::string_view seg(key.data() + start, end - start);
    if (seg.empty() || seg == "." || seg == "..") throw StoreError("invalid object key '" + key + "'");
    start = end + 1;
  }
}

LocalDirStore::LocalDirStore(fs::path root) : root_(std::move(root)) {
  std::error_code ec;
  fs::create_directories(root_, ec);
  if (ec) throw StoreError("cannot create store root " + root_.string() + ": " + ec.message());
}

void LocalDirStore::put(const std::string& key, std::span<const uint8_t> bytes) {
  validate_key(key);
  const fs::path target = root_ / key;
  std::error_code ec;
  fs::create_directories(target.parent_path(), ec);
  if (ec) throw StoreError("mkdir failed for " + key + ": " + ec.message());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(tmp_counter_++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw StoreError("write failed for " + key);
    }
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw StoreError("rename failed for " + key);
  }
}

std::optional<Bytes> LocalDirStore::get(const std::string& key) {
  validate_key(key);
  std::ifstream in(root_ / key, std::ios::binary);
  if (!in) return std::nullopt;
  Bytes data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw StoreError("read failed for " + key);
  return data;
}

std::vector<std::string> LocalDirStore::list(const std::string& prefix) {
  std::vector<std::string> keys;
  // Start from the deepest directory the prefix names fully.
  const auto slash = prefix.rfind('/');
  const fs::path start = slash == std::string::npos ? root_ : root_ / prefix.substr(0, slash);
  std::error_code ec;
  if (!fs::is_directory(start, ec)) return keys;
  for (auto it = fs::recursive_directory_iterator(start, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (!it->is_regular_file(ec)) continue;
    std::string key = fs::relative(it->path(), root_, ec).generic_string();
    if (key.find(".tmp.") != std::string::npos) continue;
    if (key.compare(0, prefix.size(), prefix) == 0) keys.push_back(std::move(key));
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

void LocalDirStore::remove(const std::string& key) {
  validate_key(key);
  std::error_code ec;
  fs::path p = root_ / key;
  fs::remove(p, ec);
  if (ec) throw StoreError("remove failed for " + key + ": " + ec.message());
  // Prune now-empty parents; fails harmlessly on the first non-empty one.
  for (p = p.parent_path(); p != root_ && p.string().size() > root_.string().size(); p = p.parent_path()) {
    if (!fs::remove(p, ec)) break;
  }
}

void MemoryStore::put(const std::string& key, std::span<const uint8_t> bytes) {
  validate_key(key);
  std::lock_guard lock(mu_);
  objects_[key] = Bytes(bytes.begin(), bytes.end());
}

std::optional<Bytes> MemoryStore::get(const std::string& key) {
  std::lock_guard lock(mu_);
  auto it = objects_.find(key);
  if (it == objects_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> MemoryStore::list(const std::string& prefix) {
  std::lock_guard lock(mu_);
  std::vector<std::string> keys;
  for (auto it = objects_.lower_bound(prefix); it != objects_.end(); ++it) {
    if (it->first.compare(0, prefix.size(), prefix) != 0) break;
    keys.push_back(it->first);
  }
  return keys;
}

void MemoryStore::remove(const std::string& key) {
  std::lock_guard lock(mu_);
  objects_.erase(key);
}

void MemoryStore::corrupt(const std::string& key, std::size_t offset) {
  std::lock_guard lock(mu_);
  auto& obj = objects_.at(key);
  obj.at(offset) ^= 0x5a;
}

FaultInjectingStore::FaultInjectingStore(std::shared_ptr<ObjectStore> inner) : inner_(std::move(inner)) {}

void FaultInjectingStore::add_rule(FaultRule rule) {
  std::lock_guard lock(mu_);
  rules_.push_back(std::move(rule));
  matched_.push_back(0);
}

void FaultInjectingStore::check_alive() const {
  if (crashed_) throw StoreError("injected crash: store unavailable");
}

void FaultInjectingStore::before_mutation(const std::string& key) {
  std::lock_guard lock(mu_);
  check_alive();
  ++mutations_;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    const auto& rule = rules_[i];
    if (!rule.key_filter.empty() && key.find(rule.key_filter) == std::string::npos) continue;
    if (matched_[i]++ != rule.at_mutation) continue;
    ++faults_fired_;
    if (rule.kind == FaultKind::crash) {
      crashed_ = true;
      throw StoreError("injected crash at " + key);
    }
    throw StoreError("injected I/O error at " + key);
  }
}

void FaultInjectingStore::put(const std::string& key, std::span<const uint8_t> bytes) {
  before_mutation(key);
  inner_->put(key, bytes);
}

std::optional<Bytes> FaultInjectingStore::get(const std::string& key) {
  check_alive();
  return inner_->get(key);
}

std::vector<std::string> FaultInjectingStore::list(const std::string& prefix) {
  check_alive();
  return inner_->list(prefix);
}

void FaultInjectingStore::remove(const std::string& key) {
  before_mutation(key);
  inner_->remove(key);
}

}  // namespace embckpt::store
