// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include "embckpt/store/payload.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "embckpt/quant/adaptive.hpp"
#include "embckpt/quant/packing.hpp"

namespace embckpt::store {

std::size_t SectionHeader::record_bytes() const {
  std::size_t n = mode == PayloadMode::quantized ? 8 + quant::packed_size(dim, bits)
                                                 : std::size_t{4} * dim;
  if (has_aux) n += std::size_t{4} * dim;
  return n;
}

std::size_t SectionHeader::section_bytes(bool incremental) const {
  return kSectionHeaderBytes + row_count * (record_bytes() + (incremental ? 8 : 0));
}

void encode_header(const SectionHeader& h, Bytes& out) {
  ByteWriter w(out);
  w.raw(kMagic);
  w.u32(h.table_id);
  w.u64(h.row_count);
  w.u32(h.dim);
  w.u8(h.bits);
  w.u8(static_cast<uint8_t>(h.mode));
  w.u8(h.has_aux ? 1 : 0);
  w.u8(0);
}

namespace {

void encode_one(const EmbeddingTable& table, uint64_t r, const SectionHeader& h, bool incremental,
                const quant::AdaptiveConfig* adaptive, std::vector<uint8_t>& codes, Bytes& out) {
  if (r >= table.rows) throw BoundsError("row " + std::to_string(r) + " outside table");
  ByteWriter w(out);
  if (incremental) w.u64(r);
  const auto row = table.row(r);
  if (h.mode == PayloadMode::quantized) {
    const auto params = adaptive && h.bits <= 4 ? quant::adaptive_params(row, h.bits, *adaptive)
                                                : quant::checkpoint_params(row, h.bits);
    w.f32(params.x_min);
    w.f32(params.x_max);
    quant::quantize_codes(row, params, codes);
    const std::size_t at = out.size();
    out.resize(at + quant::packed_size(h.dim, h.bits));
    quant::pack_codes_into(codes, h.bits, std::span(out).subspan(at));
  } else {
    w.f32s(row);
  }
  if (h.has_aux) w.f32s(table.aux_row(r));
}

void check_table(const EmbeddingTable& table, const SectionHeader& h) {
  if (h.dim != table.dim) throw ShapeError("section dim does not match table");
  if (h.has_aux && !table.has_aux()) throw ShapeError("section expects aux state the table lacks");
}

}  // namespace

void encode_rows(const EmbeddingTable& table, std::span<const uint64_t> rows,
                 const SectionHeader& h, bool incremental, Bytes& out,
                 const quant::AdaptiveConfig* adaptive) {
  check_table(table, h);
  std::vector<uint8_t> codes(h.dim);
  out.reserve(out.size() + rows.size() * (h.record_bytes() + 8));
  for (uint64_t r : rows) encode_one(table, r, h, incremental, adaptive, codes, out);
}

void encode_row_range(const EmbeddingTable& table, uint64_t first, uint64_t count,
                      const SectionHeader& h, bool incremental, Bytes& out,
                 const quant::AdaptiveConfig* adaptive) {
  check_table(table, h);
  std::vector<uint8_t> codes(h.dim);
  out.reserve(out.size() + count * (h.record_bytes() + 8));
  for (uint64_t r = first; r < first + count; ++r) encode_one(table, r, h, incremental, adaptive, codes, out);
}

Bytes serialize_sections(std::span<const TableSection> sections, bool incremental) {
  Bytes out;
  for (const auto& s : sections) {
    const auto& h = s.header;
    encode_header(h, out);
    ByteWriter w(out);
    const std::size_t packed_row = quant::packed_size(h.dim, h.bits);
    for (uint64_t i = 0; i < h.row_count; ++i) {
      if (incremental) w.u64(s.row_index.at(i));
      if (h.mode == PayloadMode::quantized) {
        w.f32(s.x_min.at(i));
        w.f32(s.x_max.at(i));
        w.raw(std::span(s.packed).subspan(i * packed_row, packed_row));
      } else {
        w.f32s(std::span(s.values).subspan(i * h.dim, h.dim));
      }
      if (h.has_aux) w.f32s(std::span(s.aux).subspan(i * h.dim, h.dim));
    }
  }
  return out;
}

namespace {

SectionHeader read_header(ByteReader& r) {
  const auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("bad section magic");
  SectionHeader h;
  h.table_id = r.u32();
  h.row_count = r.u64();
  h.dim = r.u32();
  h.bits = r.u8();
  const uint8_t mode = r.u8();
  const uint8_t aux = r.u8();
  const uint8_t reserved = r.u8();
  if (mode > 1) throw FormatError("unknown payload mode " + std::to_string(mode));
  if (aux > 1) throw FormatError("bad aux flag");
  if (reserved != 0) throw FormatError("reserved header byte is not zero");
  if (h.dim == 0) throw FormatError("section has zero dim");
  h.mode = static_cast<PayloadMode>(mode);
  h.has_aux = aux == 1;
  if (h.mode == PayloadMode::quantized && (h.bits < 1 || h.bits > 8)) {
    throw FormatError("quantized section with bit width " + std::to_string(h.bits));
  }
  if (h.mode == PayloadMode::fp32 && h.bits != 32) throw FormatError("fp32 section must declare 32 bits");
  return h;
}

}  // namespace

std::vector<TableSection> parse_payload(std::span<const uint8_t> bytes, bool incremental) {
  std::vector<TableSection> sections;
  ByteReader r(bytes);
  while (!r.done()) {
    TableSection s;
    s.header = read_header(r);
    const auto& h = s.header;
    const std::size_t per_row = h.record_bytes() + (incremental ? 8 : 0);
    if (h.row_count > r.remaining() / per_row) throw FormatError("section longer than payload");
    const std::size_t packed_row = quant::packed_size(h.dim, h.bits);
    const std::size_t n = h.row_count;
    if (incremental) s.row_index.resize(n);
    if (h.mode == PayloadMode::quantized) {
      s.x_min.resize(n);
      s.x_max.resize(n);
      s.packed.resize(n * packed_row);
    } else {
      s.values.resize(n * h.dim);
    }
    if (h.has_aux) s.aux.resize(n * h.dim);
    for (std::size_t i = 0; i < n; ++i) {
      if (incremental) s.row_index[i] = r.u64();
      if (h.mode == PayloadMode::quantized) {
        s.x_min[i] = r.f32();
        s.x_max[i] = r.f32();
        const auto codes = r.raw(packed_row);
        std::copy(codes.begin(), codes.end(), s.packed.begin() + i * packed_row);
      } else {
        r.f32s(std::span(s.values).subspan(i * h.dim, h.dim));
      }
      if (h.has_aux) r.f32s(std::span(s.aux).subspan(i * h.dim, h.dim));
    }
    sections.push_back(std::move(s));
  }
  return sections;
}

void apply_section(const TableSection& s, bool incremental, EmbeddingTable& table) {
  const auto& h = s.header;
  if (h.table_id != table.table_id || h.dim != table.dim) throw FormatError("section does not match table");
  if (h.has_aux != table.has_aux()) throw FormatError("section aux flag does not match table");
  if (!incremental && h.row_count != table.rows) throw FormatError("full section row count mismatch");
  const std::size_t packed_row = quant::packed_size(h.dim, h.bits);
  std::vector<uint8_t> codes(h.dim);
  for (uint64_t i = 0; i < h.row_count; ++i) {
    const uint64_t r = incremental ? s.row_index[i] : i;
    if (r >= table.rows) throw FormatError("row index outside table");
    auto row = table.row(r);
    if (h.mode == PayloadMode::quantized) {
      const quant::QuantParams p{h.bits, s.x_min[i], s.x_max[i]};
      try {
        p.validate();
      } catch (const DataError& e) {
        throw FormatError(std::string("stored quantization range is invalid: ") + e.what());
      }
      quant::unpack_codes_into(std::span(s.packed).subspan(i * packed_row, packed_row), h.bits, codes);
      quant::dequantize_codes(codes, p, row);
    } else {
      std::copy_n(s.values.begin() + i * h.dim, h.dim, row.begin());
    }
    if (h.has_aux) std::copy_n(s.aux.begin() + i * h.dim, h.dim, table.aux_row(r).begin());
  }
}

Bytes encode_dense(std::span<const float> dense) {
  Bytes out;
  ByteWriter(out).f32s(dense);
  return out;
}

std::vector<float> decode_dense(std::span<const uint8_t> bytes, std::size_t count) {
  if (bytes.size() != count * 4) throw FormatError("dense object has wrong size");
  std::vector<float> out(count);
  ByteReader(bytes).f32s(out);
  return out;
}

}  // namespace embckpt::store
