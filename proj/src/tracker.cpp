// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "embckpt/tracker.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "embckpt/error.hpp"

namespace embckpt {

DirtyBitmap::DirtyBitmap(uint32_t table_id, uint64_t rows, TrackScope scope)
    : table_id_(table_id), rows_(rows), scope_(scope), words_((rows + 63) / 64, 0) {}

void DirtyBitmap::mark(std::span<const uint64_t> indices) {
  for (uint64_t i : indices) {
    if (i >= rows_) {
      throw BoundsError("row " + std::to_string(i) + " out of range for table " +
                        std::to_string(table_id_) + " with " + std::to_string(rows_) + " rows");
    }
  }
  for (uint64_t i : indices) words_[i >> 6] |= uint64_t{1} << (i & 63);
}

void DirtyBitmap::mark(uint64_t index) { mark(std::span<const uint64_t>(&index, 1)); }

bool DirtyBitmap::test(uint64_t index) const {
  if (index >= rows_) throw BoundsError("bitmap index out of range");
  return (words_[index >> 6] >> (index & 63)) & 1u;
}

uint64_t DirtyBitmap::count() const {
  uint64_t n = 0;
  for (uint64_t w : words_) n += std::popcount(w);
  return n;
}

double DirtyBitmap::fraction() const {
  return rows_ == 0 ? 0.0 : static_cast<double>(count()) / static_cast<double>(rows_);
}

void DirtyBitmap::clear() { std::fill(words_.begin(), words_.end(), 0); }

DirtyBitmap& DirtyBitmap::operator|=(const DirtyBitmap& other) {
  if (other.rows_ != rows_ || other.table_id_ != table_id_) {
    throw ShapeError("cannot merge bitmaps of different tables or lengths");
  }
  for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= other.words_[w];
  return *this;
}

DirtyBitmap merge_or(const DirtyBitmap& a, const DirtyBitmap& b) {
  DirtyBitmap out = a;
  out |= b;
  return out;
}

DirtyRows dirty_rows(const DirtyBitmap& bitmap) {
  DirtyRows out;
  out.indices.reserve(bitmap.count());
  const auto words = bitmap.words();
  for (std::size_t w = 0; w < words.size(); ++w) {
    for (uint64_t bits = words[w]; bits != 0; bits &= bits - 1) {
      out.indices.push_back(w * 64 + std::countr_zero(bits));
    }
  }
  out.fraction = bitmap.rows() == 0 ? 0.0
                                    : static_cast<double>(out.indices.size()) /
                                          static_cast<double>(bitmap.rows());
  return out;
}

Tracker::Tracker(const ModelConfig& config) {
  for (uint32_t t = 0; t < config.num_tables(); ++t) {
    interval_.emplace_back(t, config.rows_per_table[t], TrackScope::interval);
    folded_.emplace_back(t, config.rows_per_table[t], TrackScope::since_baseline);
  }
}

void Tracker::mark(uint32_t table_id, std::span<const uint64_t> rows) {
  if (table_id >= interval_.size()) throw BoundsError("no such table in tracker");
  interval_[table_id].mark(rows);
}

DirtyBitmap Tracker::since_baseline(uint32_t table_id) const {
  return merge_or(folded_.at(table_id), interval_.at(table_id));
}

TrackerView Tracker::view() const {
  TrackerView v;
  v.interval = interval_;
  for (uint32_t t = 0; t < interval_.size(); ++t) v.since_baseline.push_back(since_baseline(t));
  return v;
}

void Tracker::reset_interval() {
  for (std::size_t t = 0; t < interval_.size(); ++t) {
    folded_[t] |= interval_[t];
    interval_[t].clear();
  }
}

void Tracker::reset_baseline() {
  for (std::size_t t = 0; t < interval_.size(); ++t) {
    folded_[t].clear();
    interval_[t].clear();
  }
}

void Tracker::reinstate(const TrackerView& view) {
  for (std::size_t t = 0; t < interval_.size(); ++t) {
    interval_[t] |= view.interval.at(t);
    folded_[t] |= view.since_baseline.at(t);
  }
}

void Tracker::set_since_baseline(std::vector<DirtyBitmap> bitmaps) {
  if (bitmaps.size() != folded_.size()) throw ShapeError("tracker table count mismatch");
  for (std::size_t t = 0; t < bitmaps.size(); ++t) {
    if (bitmaps[t].rows() != folded_[t].rows()) throw ShapeError("tracker row count mismatch");
  }
  folded_ = std::move(bitmaps);
}

std::size_t Tracker::memory_bytes() const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < interval_.size(); ++t) {
    n += interval_[t].memory_bytes() + folded_[t].memory_bytes();
  }
  return n;
}

}  // namespace embckpt
