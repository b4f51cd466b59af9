// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "embckpt/model.hpp"

namespace embckpt {

enum class TrackScope : uint8_t { interval, since_baseline };

// Modified-row bitset for one table.
class DirtyBitmap {
 public:
  DirtyBitmap() = default;
  DirtyBitmap(uint32_t table_id, uint64_t rows, TrackScope scope = TrackScope::interval);

  uint32_t table_id() const { return table_id_; }
  uint64_t rows() const { return rows_; }
  TrackScope scope() const { return scope_; }

  /// Sets every listed bit; throws BoundsError (leaving the bitmap untouched)
  /// if any index is >= rows().
  void mark(std::span<const uint64_t> indices);
  void mark(uint64_t index);
  bool test(uint64_t index) const;

  uint64_t count() const;
  double fraction() const;
  bool empty() const { return count() == 0; }
  void clear();

  /// In-place OR; throws ShapeError on a different table or length.
  DirtyBitmap& operator|=(const DirtyBitmap& other);

  std::size_t memory_bytes() const { return words_.size() * sizeof(uint64_t); }
  std::span<const uint64_t> words() const { return words_; }

  bool operator==(const DirtyBitmap& other) const {
    return table_id_ == other.table_id_ && rows_ == other.rows_ && words_ == other.words_;
  }

 private:
  uint32_t table_id_ = 0;
  uint64_t rows_ = 0;
  TrackScope scope_ = TrackScope::interval;
  std::vector<uint64_t> words_;
};

DirtyBitmap merge_or(const DirtyBitmap& a, const DirtyBitmap& b);

struct DirtyRows {
  std::vector<uint64_t> indices;  // strictly increasing
  double fraction = 0.0;
};

DirtyRows dirty_rows(const DirtyBitmap& bitmap);

// Views of both scopes taken at one instant.
struct TrackerView {
  std::vector<DirtyBitmap> interval;
  std::vector<DirtyBitmap> since_baseline;
};

// Per-table tracking in two scopes. Marks land in the interval scope; the
// since-baseline scope is the fold of every interval since the last baseline
// plus the current interval, so interval ⊆ since_baseline always holds.
class Tracker {
 public:
  Tracker() = default;
  explicit Tracker(const ModelConfig& config);

  std::size_t num_tables() const { return interval_.size(); }

  void mark(uint32_t table_id, std::span<const uint64_t> rows);

  const DirtyBitmap& interval(uint32_t table_id) const { return interval_.at(table_id); }
  DirtyBitmap since_baseline(uint32_t table_id) const;

  TrackerView view() const;

  /// Folds the interval scope into the since-baseline accumulation, then
  /// clears the interval scope.
  void reset_interval();

  /// Starts a new baseline: both scopes become empty.
  void reset_baseline();

  /// ORs a previously captured view back in, used when the checkpoint that
  /// consumed the view never committed.
  void reinstate(const TrackerView& view);

  /// Replaces the since-baseline accumulation (used after restore).
  void set_since_baseline(std::vector<DirtyBitmap> bitmaps);

  std::size_t memory_bytes() const;

 private:
  std::vector<DirtyBitmap> interval_;
  std::vector<DirtyBitmap> folded_;
};

}  // namespace embckpt
