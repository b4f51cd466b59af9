// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <numeric>
#include <set>

#include "doctest.h"
#include "embckpt/error.hpp"
#include "embckpt/model.hpp"
#include "embckpt/random.hpp"

using namespace embckpt;

TEST_CASE("philox4x32-10 known answers") {
  // Reference vectors published with Random123.
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        PhiloxBlock{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32_10({~0u, ~0u, ~0u, ~0u}, {~0u, ~0u}) ==
        PhiloxBlock{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32_10({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                      {0xa4093822u, 0x299f31d0u}) ==
        PhiloxBlock{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("uniform_pm1 covers [-1, 1)") {
  CHECK(uniform_pm1(0) == -1.0f);
  CHECK(uniform_pm1(~0u) < 1.0f);
  CHECK(uniform_pm1(0x80000000u) == 0.0f);
}

TEST_CASE("init_model is deterministic in the seed") {
  const auto cfg = ModelConfig::uniform(1, 4, 2, 1);
  const auto a = init_model(cfg, 7);
  const auto b = init_model(cfg, 7);
  CHECK(a.tables == b.tables);
  CHECK(a.dense == b.dense);
  CHECK(model_hash(a) == model_hash(b));
  CHECK(model_hash(init_model(cfg, 8)) != model_hash(a));
  CHECK(a.reader == ReaderState{});
}

TEST_CASE("tables are assigned to shards round-robin") {
  const auto cfg = ModelConfig::uniform(5, 8, 2, 2);
  const auto m = init_model(cfg, 1);
  CHECK(m.shard_tables(0) == std::vector<uint32_t>{0, 2, 4});
  CHECK(m.shard_tables(1) == std::vector<uint32_t>{1, 3});

  const auto two = init_model(ModelConfig::uniform(2, 4, 2, 2), 1);
  CHECK(two.config.shard_of(0) == 0);
  CHECK(two.config.shard_of(1) == 1);
}

TEST_CASE("shards partition the model") {
  const auto cfg = ModelConfig::uniform(7, 3, 2, 3);
  const auto snap = snapshot(init_model(cfg, 3));
  std::multiset<uint32_t> seen;
  for (const auto& shard : snap->shards) {
    for (const auto& t : shard.tables) {
      seen.insert(t.table_id);
      CHECK(cfg.shard_of(t.table_id) == shard.shard_id);
    }
  }
  CHECK(seen == std::multiset<uint32_t>{0, 1, 2, 3, 4, 5, 6});
}

TEST_CASE("initial values look uniform on [-1, 1)") {
  const auto m = init_model(ModelConfig::uniform(1, 10000, 1, 1), 7);
  const auto& v = m.tables[0].values;
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (float x : v) var += (x - mean) * (x - mean);
  var /= n - 1;
  // U(-1,1): mean 0, variance 1/3, Var(X^2) = 1/5 - 1/9.
  CHECK(std::fabs(mean) < 3.0 * std::sqrt(1.0 / 3.0 / n));
  CHECK(std::fabs(var - 1.0 / 3.0) < 3.0 * std::sqrt((1.0 / 5 - 1.0 / 9) / n));
  for (float x : v) {
    REQUIRE(x >= -1.0f);
    REQUIRE(x < 1.0f);
  }
}

TEST_CASE("invalid configs are rejected") {
  CHECK_THROWS_AS(init_model(ModelConfig::uniform(0, 4, 2, 1), 1), ConfigError);
  CHECK_THROWS_AS(init_model(ModelConfig::uniform(1, 4, 0, 1), 1), ConfigError);
  CHECK_THROWS_AS(init_model(ModelConfig::uniform(1, 4, 2, 0), 1), ConfigError);
  CHECK_THROWS_AS(init_model(ModelConfig::uniform(1, 0, 2, 1), 1), ConfigError);
}

TEST_CASE("snapshot is isolated from later mutation") {
  auto m = init_model(ModelConfig::uniform(2, 4, 3, 2, /*has_aux=*/true, 5), 11);
  m.reader.batches_consumed = 42;
  const auto snap = snapshot(m);
  CHECK(snap->snapshot_batch == 42);
  CHECK(model_hash(to_model(*snap)) == model_hash(m));

  const auto before = to_model(*snap);
  // Exhaustively perturb every element of the live model.
  for (auto& t : m.tables) {
    for (float& v : t.values) v += 1.0f;
    for (float& v : t.aux) v += 1.0f;
  }
  for (float& v : m.dense) v += 1.0f;
  m.reader.batches_consumed = 99;

  const auto after = to_model(*snap);
  CHECK(after.tables == before.tables);
  CHECK(after.dense == before.dense);
  CHECK(snap->reader.batches_consumed == 42);
}

TEST_CASE("snapshots without training in between are identical") {
  const auto m = init_model(ModelConfig::uniform(3, 5, 2, 2), 5);
  const auto a = snapshot(m);
  const auto b = snapshot(m);
  CHECK(model_hash(to_model(*a)) == model_hash(to_model(*b)));
  CHECK(model_hash(to_model(*a)) == model_hash(init_model(m.config, 5)));
}
