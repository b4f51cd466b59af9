// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <random>

#include "doctest.h"
#include "embckpt/error.hpp"
#include "embckpt/quant/packing.hpp"
#include "embckpt/quant/uniform.hpp"
#include "embckpt/store/payload.hpp"

using namespace embckpt;
using namespace embckpt::store;

namespace {

TableSection random_section(std::mt19937_64& rng, bool incremental) {
  std::uniform_int_distribution<int> coin(0, 1);
  std::uniform_real_distribution<float> val(-100.0f, 100.0f);
  TableSection s;
  auto& h = s.header;
  h.table_id = static_cast<uint32_t>(rng() % 1000);
  h.dim = 1 + static_cast<uint32_t>(rng() % 70);
  h.row_count = rng() % 9;
  h.has_aux = coin(rng);
  h.mode = coin(rng) ? PayloadMode::quantized : PayloadMode::fp32;
  static constexpr uint8_t kBits[] = {2, 3, 4, 8};
  h.bits = h.mode == PayloadMode::quantized ? kBits[rng() % 4] : 32;
  for (uint64_t i = 0; i < h.row_count; ++i) {
    if (incremental) s.row_index.push_back(rng() % 100000);
    if (h.mode == PayloadMode::quantized) {
      float a = val(rng), b = val(rng);
      if (a > b) std::swap(a, b);
      s.x_min.push_back(a);
      s.x_max.push_back(b);
      std::vector<uint8_t> codes(h.dim);
      for (auto& c : codes) c = static_cast<uint8_t>(rng() % (1u << h.bits));
      const auto packed = quant::pack_codes(codes, h.bits);
      s.packed.insert(s.packed.end(), packed.begin(), packed.end());
    } else {
      for (uint32_t j = 0; j < h.dim; ++j) s.values.push_back(val(rng));
    }
    if (h.has_aux) {
      for (uint32_t j = 0; j < h.dim; ++j) s.aux.push_back(val(rng));
    }
  }
  return s;
}

EmbeddingTable small_table(bool aux) {
  EmbeddingTable t{7, 3, 2, {1.0f, 2.0f, -1.0f, 0.5f, 4.0f, 4.0f}, {}};
  if (aux) t.aux = {0.1f, 0.2f, 0.3f, 0.4f, 0.5f, 0.6f};
  return t;
}

std::vector<uint8_t> le32(uint32_t v) {
  return {uint8_t(v), uint8_t(v >> 8), uint8_t(v >> 16), uint8_t(v >> 24)};
}

std::vector<uint8_t> lef(float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  return le32(v);
}

void append(Bytes& out, const std::vector<uint8_t>& b) { out.insert(out.end(), b.begin(), b.end()); }

}  // namespace

TEST_CASE("parse of serialize is identity") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 500; ++trial) {
    const bool incremental = trial % 2 == 1;
    std::vector<TableSection> sections;
    const int n = static_cast<int>(rng() % 4);
    for (int i = 0; i < n; ++i) sections.push_back(random_section(rng, incremental));
    const Bytes bytes = serialize_sections(sections, incremental);
    std::size_t expect = 0;
    for (const auto& s : sections) expect += s.header.section_bytes(incremental);
    REQUIRE(bytes.size() == expect);
    const auto parsed = parse_payload(bytes, incremental);
    REQUIRE(parsed == sections);
    CHECK(serialize_sections(parsed, incremental) == bytes);
  }
}

TEST_CASE("fp32 full section bytes") {
  const auto t = small_table(false);
  SectionHeader h{7, 3, 2, 32, PayloadMode::fp32, false};
  Bytes out;
  encode_header(h, out);
  encode_row_range(t, 0, 3, h, false, out);

  Bytes want{'C', 'N', 'R', '1'};
  append(want, le32(7));
  append(want, le32(3));
  append(want, le32(0));
  append(want, le32(2));
  append(want, {32, 0, 0, 0});
  for (float v : t.values) append(want, lef(v));
  CHECK(out == want);
}

TEST_CASE("quantized incremental section bytes") {
  const auto t = small_table(true);
  SectionHeader h{7, 1, 2, 2, PayloadMode::quantized, true};
  Bytes out;
  encode_header(h, out);
  const std::vector<uint64_t> rows{1};
  encode_rows(t, rows, h, true, out);

  // Row 1 = {-1, 0.5}: 2-bit adaptive search keeps [-1, 0.5], codes {0, 3}.
  Bytes want{'C', 'N', 'R', '1'};
  append(want, le32(7));
  append(want, le32(1));
  append(want, le32(0));
  append(want, le32(2));
  append(want, {2, 1, 1, 0});
  append(want, le32(1));
  append(want, le32(0));
  append(want, lef(-1.0f));
  append(want, lef(0.5f));
  want.push_back(0x0C);
  append(want, lef(0.3f));
  append(want, lef(0.4f));
  CHECK(out == want);
}

TEST_CASE("apply_section restores rows") {
  auto t = small_table(true);
  SectionHeader h{7, 3, 2, 32, PayloadMode::fp32, true};
  Bytes out;
  encode_header(h, out);
  encode_row_range(t, 0, 3, h, false, out);
  EmbeddingTable blank{7, 3, 2, std::vector<float>(6), std::vector<float>(6)};
  apply_section(parse_payload(out, false).at(0), false, blank);
  CHECK(blank == t);

  SectionHeader q{7, 2, 2, 8, PayloadMode::quantized, true};
  Bytes qb;
  encode_header(q, qb);
  const std::vector<uint64_t> rows{2, 0};
  encode_rows(t, rows, q, true, qb);
  EmbeddingTable target{7, 3, 2, std::vector<float>(6, 9.0f), std::vector<float>(6)};
  apply_section(parse_payload(qb, true).at(0), true, target);
  CHECK(target.row(1)[0] == 9.0f);
  CHECK(target.row(2)[0] == 4.0f);  // constant row is exact
  CHECK(target.row(0)[0] == doctest::Approx(1.0f).epsilon(0.01));
  CHECK(target.aux_row(2)[1] == 0.6f);
}

TEST_CASE("malformed payloads are rejected") {
  std::mt19937_64 rng(9);
  std::vector<TableSection> sections{random_section(rng, true), random_section(rng, true)};
  sections[0].header.row_count = 0;
  sections[0].row_index.clear();
  sections[0].x_min.clear();
  sections[0].x_max.clear();
  sections[0].packed.clear();
  sections[0].values.clear();
  sections[0].aux.clear();
  sections[1] = random_section(rng, true);
  while (sections[1].header.row_count == 0) sections[1] = random_section(rng, true);
  const Bytes good = serialize_sections(sections, true);
  REQUIRE_NOTHROW(parse_payload(good, true));

  for (std::size_t cut = 1; cut < good.size(); ++cut) {
    if (cut == kSectionHeaderBytes) continue;  // the empty first section alone is valid
    CHECK_THROWS_AS(parse_payload(std::span(good).first(cut), true), FormatError);
  }
  Bytes trailing = good;
  trailing.push_back(0);
  CHECK_THROWS_AS(parse_payload(trailing, true), FormatError);

  auto tweak = [&](std::size_t offset, uint8_t value) {
    Bytes b = good;
    b[offset] = value;
    return b;
  };
  CHECK_THROWS_AS(parse_payload(tweak(0, 'X'), true), FormatError);
  CHECK_THROWS_AS(parse_payload(tweak(21, 2), true), FormatError);  // mode
  CHECK_THROWS_AS(parse_payload(tweak(22, 2), true), FormatError);  // aux flag
  CHECK_THROWS_AS(parse_payload(tweak(23, 1), true), FormatError);  // reserved
  CHECK_THROWS_AS(parse_payload(tweak(20, 9), true), FormatError);  // bit width
}

TEST_CASE("row count overflow is rejected before allocation") {
  Bytes b;
  encode_header({1, ~uint64_t{0} / 2, 4, 32, PayloadMode::fp32, false}, b);
  CHECK_THROWS_AS(parse_payload(b, false), FormatError);
}

TEST_CASE("dense codec") {
  const std::vector<float> d{1.5f, -2.0f, 0.0f};
  CHECK(decode_dense(encode_dense(d), 3) == d);
  CHECK_THROWS_AS(decode_dense(encode_dense(d), 4), FormatError);
}
