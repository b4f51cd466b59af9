// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

// Binary shard payload. A shard object is a sequence of table sections:
//
//   "CNR1" | table_id u32 | row_count u64 | dim u32 | bitwidth u8 | mode u8 |
//   aux_flag u8 | reserved u8 (0)
//
// followed by row_count records:
//
//   [row_index u64, incremental checkpoints only]
//   mode 1 (quantized): x_min f32 | x_max f32 | ceil(dim*bitwidth/8) packed codes
//   mode 0 (fp32):      dim f32
//   [dim f32 aux values, when aux_flag = 1]
//
// All integers and floats are little-endian. Mode 0 sections carry bitwidth 32.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "embckpt/bytes.hpp"
#include "embckpt/model.hpp"
#include "embckpt/quant/adaptive.hpp"

namespace embckpt::store {

inline constexpr uint8_t kMagic[4] = {'C', 'N', 'R', '1'};
inline constexpr std::size_t kSectionHeaderBytes = 24;

enum class PayloadMode : uint8_t { fp32 = 0, quantized = 1 };

struct SectionHeader {
  uint32_t table_id = 0;
  uint64_t row_count = 0;
  uint32_t dim = 0;
  uint8_t bits = 32;
  PayloadMode mode = PayloadMode::fp32;
  bool has_aux = false;

  /// Bytes per row record, excluding the optional row index.
  std::size_t record_bytes() const;
  std::size_t section_bytes(bool incremental) const;

  bool operator==(const SectionHeader&) const = default;
};

// Decoded table section. Quantized rows keep their stored form.
struct TableSection {
  SectionHeader header;
  std::vector<uint64_t> row_index;  // incremental only
  std::vector<float> x_min;         // quantized only, one per row
  std::vector<float> x_max;
  std::vector<uint8_t> packed;      // quantized only, row_count * packed row bytes
  std::vector<float> values;        // fp32 only, row_count * dim
  std::vector<float> aux;           // row_count * dim when has_aux

  bool operator==(const TableSection&) const = default;
};

void encode_header(const SectionHeader& header, Bytes& out);

/// Appends the records for `rows` of `table` under `header` (quantizing when
/// header.mode is quantized). Output for a row depends only on that row, so
/// callers may encode any split of the row list and concatenate. `adaptive`
/// overrides the per-width search defaults for widths up to 4.
void encode_rows(const EmbeddingTable& table, std::span<const uint64_t> rows,
                 const SectionHeader& header, bool incremental, Bytes& out,
                 const quant::AdaptiveConfig* adaptive = nullptr);

/// Same for the contiguous row range [first, first + count) of a full checkpoint.
void encode_row_range(const EmbeddingTable& table, uint64_t first, uint64_t count,
                      const SectionHeader& header, bool incremental, Bytes& out,
                      const quant::AdaptiveConfig* adaptive = nullptr);

Bytes serialize_sections(std::span<const TableSection> sections, bool incremental);

/// Throws FormatError on bad magic, unknown modes, truncation or trailing bytes.
std::vector<TableSection> parse_payload(std::span<const uint8_t> bytes, bool incremental);

/// Writes the decoded rows of a section into `table` (dequantizing mode 1).
/// Throws FormatError if the section does not fit the table.
void apply_section(const TableSection& section, bool incremental, EmbeddingTable& table);

Bytes encode_dense(std::span<const float> dense);
std::vector<float> decode_dense(std::span<const uint8_t> bytes, std::size_t count);

}  // namespace embckpt::store
