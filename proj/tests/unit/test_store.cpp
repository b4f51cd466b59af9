// Copyright 2026 The embckpt Authors
// SPDX-License-Identifier: Apache-2.0

#include <filesystem>
#include <random>

#include "doctest.h"
#include "embckpt/crc32c.hpp"
#include "embckpt/error.hpp"
#include "embckpt/store/checkpoint_store.hpp"
#include "embckpt/store/payload.hpp"

using namespace embckpt;
using namespace embckpt::store;

namespace {

Manifest draft(CheckpointKind kind, PolicyKind policy, std::optional<uint64_t> base = {},
               std::optional<uint64_t> parent = {}, uint32_t shards = 2) {
  Manifest m;
  m.kind = kind;
  m.policy = policy;
  m.base_id = base;
  m.parent_id = parent;
  m.num_shards = shards;
  m.dense_size = 2;
  for (uint32_t t = 0; t < shards; ++t) m.tables.push_back({t, 4, 2, t});
  return m;
}

// One fp32 section of shard + 1 rows, dim 2: 32 bytes for shard 0, 40 for shard 1.
Bytes payload(uint32_t shard, uint64_t id, bool incremental = false) {
  TableSection s;
  s.header = {shard, shard + 1, 2, 32, PayloadMode::fp32, false};
  for (uint32_t r = 0; r <= shard; ++r) {
    if (incremental) s.row_index.push_back(r);
    s.values.push_back(static_cast<float>(id));
    s.values.push_back(static_cast<float>(r));
  }
  return serialize_sections(std::vector<TableSection>{s}, incremental);
}

uint64_t write(CheckpointStore& cs, Manifest m) {
  const bool inc = m.kind == CheckpointKind::incremental;
  auto h = cs.begin(std::move(m));
  for (uint32_t s = 0; s < 2; ++s) cs.put_shard(h, s, payload(s, h->id(), inc));
  cs.put_dense(h, std::vector<float>{1.0f, 2.0f});
  return cs.commit(h);
}

std::vector<uint64_t> ids(const std::vector<Manifest>& chain) {
  std::vector<uint64_t> out;
  for (const auto& m : chain) out.push_back(m.checkpoint_id);
  return out;
}

}  // namespace

TEST_CASE("validate_key") {
  CHECK_NOTHROW(validate_key("runs/a/b.bin"));
  for (const char* bad : {"", "/abs", "a//b", "a/./b", "a/../b", "trail/", "x.tmp.3"}) {
    CHECK_THROWS_AS(validate_key(bad), StoreError);
  }
}

TEST_CASE("object stores agree") {
  const auto root = std::filesystem::temp_directory_path() / "embckpt_test_objects";
  std::filesystem::remove_all(root);
  LocalDirStore local(root);
  MemoryStore memory;
  for (ObjectStore* s : {static_cast<ObjectStore*>(&local), static_cast<ObjectStore*>(&memory)}) {
    s->put("a/b/one", as_bytes("1"));
    s->put("a/b/two", as_bytes("22"));
    s->put("a/c", as_bytes(""));
    s->put("z", as_bytes("zz"));
    s->put("a/b/one", as_bytes("111"));
    CHECK(s->get("a/b/one") == Bytes{'1', '1', '1'});
    CHECK(s->get("a/c") == Bytes{});
    CHECK_FALSE(s->get("a/none").has_value());
    CHECK(s->list("a/") == std::vector<std::string>{"a/b/one", "a/b/two", "a/c"});
    CHECK(s->list("a/b/t") == std::vector<std::string>{"a/b/two"});
    CHECK(s->list("q/") .empty());
    s->remove("a/b/one");
    s->remove("a/b/one");
    CHECK(s->list("") == std::vector<std::string>{"a/b/two", "a/c", "z"});
  }
  local.remove("a/b/two");
  CHECK_FALSE(std::filesystem::exists(root / "a" / "b"));
  std::filesystem::remove_all(root);
}

TEST_CASE("begin, abort and non-overlap") {
  auto mem = std::make_shared<MemoryStore>();
  CheckpointStore cs(mem, "r");
  CHECK_FALSE(cs.latest_valid().has_value());

  auto h = cs.begin(draft(CheckpointKind::full, PolicyKind::full_only));
  cs.put_shard(h, 0, payload(0, 1));
  CHECK_FALSE(mem->list("runs/r/pending/").empty());
  CHECK_FALSE(cs.latest_valid().has_value());
  CHECK_THROWS_AS(cs.begin(draft(CheckpointKind::full, PolicyKind::full_only)), ConflictError);
  CHECK_THROWS_AS(cs.put_shard(h, 0, payload(0, 1)), PreconditionError);
  CHECK_THROWS_AS(cs.put_shard(h, 5, payload(0, 1)), PreconditionError);
  CHECK_THROWS_AS(cs.commit(h), PreconditionError);

  cs.abort(h);
  CHECK(mem->list("runs/r/pending/").empty());
  CHECK_FALSE(cs.latest_valid().has_value());

  const uint64_t id = write(cs, draft(CheckpointKind::full, PolicyKind::full_only));
  CHECK(id == 2);
  CHECK(cs.latest_valid() == 2u);
  CHECK(mem->list("runs/r/pending/").empty());
}

TEST_CASE("commit publishes manifest and objects") {
  const auto root = std::filesystem::temp_directory_path() / "embckpt_test_layout";
  std::filesystem::remove_all(root);
  auto local = std::make_shared<LocalDirStore>(root);
  CheckpointStore cs(local, "run1", 16);
  const uint64_t id = write(cs, draft(CheckpointKind::full, PolicyKind::intermittent));
  CHECK(std::filesystem::exists(root / "runs/run1/ckpt/0000000001/manifest.json"));
  // 32-byte shard in 16-byte segments.
  CHECK(local->list("runs/run1/ckpt/0000000001/shard-0000") ==
        std::vector<std::string>{"runs/run1/ckpt/0000000001/shard-0000.seg-0000",
                                 "runs/run1/ckpt/0000000001/shard-0000.seg-0001"});
  const Manifest m = cs.load_manifest(id);
  CHECK(m.shards.at(0).bytes == 32);
  CHECK(m.shards.at(0).crc32c == crc32c(payload(0, 1)));
  CHECK(cs.read_shard(m, 1) == payload(1, 1));
  CHECK(cs.read_dense(m) == std::vector<float>{1.0f, 2.0f});
  CHECK(parse_manifest(as_bytes(to_json(m))) == m);
  std::filesystem::remove_all(root);
}

TEST_CASE("empty incremental commits") {
  CheckpointStore cs(std::make_shared<MemoryStore>(), "r");
  write(cs, draft(CheckpointKind::full, PolicyKind::one_shot_baseline));
  auto h = cs.begin(draft(CheckpointKind::incremental, PolicyKind::one_shot_baseline, 1, 1));
  cs.put_shard(h, 0, {});
  cs.put_shard(h, 1, {});
  cs.put_dense(h, std::vector<float>{0.0f, 0.0f});
  CHECK(cs.commit(h) == 2);
  const Manifest m = cs.load_manifest(2);
  CHECK(m.payload_bytes() == 0);
  CHECK(m.shards.at(0).keys.empty());
  CHECK(cs.read_shard(m, 0).empty());
}

TEST_CASE("resolve_chain") {
  CheckpointStore one(std::make_shared<MemoryStore>(), "one");
  write(one, draft(CheckpointKind::full, PolicyKind::one_shot_baseline));
  write(one, draft(CheckpointKind::incremental, PolicyKind::one_shot_baseline, 1, 1));
  write(one, draft(CheckpointKind::incremental, PolicyKind::one_shot_baseline, 1, 2));
  CHECK(ids(one.resolve_chain(1)) == std::vector<uint64_t>{1});
  CHECK(ids(one.resolve_chain(3)) == std::vector<uint64_t>{1, 3});

  auto mem = std::make_shared<MemoryStore>();
  CheckpointStore con(mem, "con");
  write(con, draft(CheckpointKind::full, PolicyKind::consecutive_increment));
  write(con, draft(CheckpointKind::incremental, PolicyKind::consecutive_increment, 1, 1));
  write(con, draft(CheckpointKind::incremental, PolicyKind::consecutive_increment, 1, 2));
  CHECK(ids(con.resolve_chain(3)) == std::vector<uint64_t>{1, 2, 3});
  CHECK(ids(con.verify(3)) == std::vector<uint64_t>{1, 2, 3});

  mem->remove("runs/con/ckpt/0000000002/manifest.json");
  CHECK_THROWS_AS(con.resolve_chain(3), IntegrityError);
  mem->remove("runs/con/ckpt/0000000001/manifest.json");
  CHECK_THROWS_AS(one.resolve_chain(4), IntegrityError);
}

TEST_CASE("checksum mismatch is an integrity error") {
  auto mem = std::make_shared<MemoryStore>();
  CheckpointStore cs(mem, "r");
  write(cs, draft(CheckpointKind::full, PolicyKind::full_only));
  const Manifest m = cs.load_manifest(1);
  mem->corrupt("runs/r/ckpt/0000000001/shard-0001.seg-0000", 3);
  CHECK_NOTHROW(cs.read_shard(m, 0));
  CHECK_THROWS_AS(cs.read_shard(m, 1), IntegrityError);
  mem->remove("runs/r/ckpt/0000000001/dense.bin");
  CHECK_THROWS_AS(cs.read_dense(m), IntegrityError);
}

TEST_CASE("gc keeps referenced baselines") {
  SUBCASE("chain full <- inc") {
    CheckpointStore cs(std::make_shared<MemoryStore>(), "r");
    write(cs, draft(CheckpointKind::full, PolicyKind::one_shot_baseline));
    write(cs, draft(CheckpointKind::incremental, PolicyKind::one_shot_baseline, 1, 1));
    CHECK(cs.gc(1).empty());
    CHECK(cs.valid_ids() == std::vector<uint64_t>{1, 2});
  }
  SUBCASE("independent fulls") {
    CheckpointStore cs(std::make_shared<MemoryStore>(), "r");
    write(cs, draft(CheckpointKind::full, PolicyKind::full_only));
    write(cs, draft(CheckpointKind::full, PolicyKind::full_only));
    CHECK(cs.gc(1) == std::vector<uint64_t>{1});
    CHECK(cs.valid_ids() == std::vector<uint64_t>{2});
    CHECK(cs.objects().list("runs/r/ckpt/0000000001/").empty());
  }
  SUBCASE("one-shot drops superseded increments") {
    CheckpointStore cs(std::make_shared<MemoryStore>(), "r");
    write(cs, draft(CheckpointKind::full, PolicyKind::one_shot_baseline));
    write(cs, draft(CheckpointKind::incremental, PolicyKind::one_shot_baseline, 1, 1));
    write(cs, draft(CheckpointKind::incremental, PolicyKind::one_shot_baseline, 1, 2));
    CHECK(cs.gc(1) == std::vector<uint64_t>{2});
  }
  SUBCASE("consecutive keeps the whole chain") {
    CheckpointStore cs(std::make_shared<MemoryStore>(), "r");
    write(cs, draft(CheckpointKind::full, PolicyKind::consecutive_increment));
    for (uint64_t p = 1; p <= 4; ++p) {
      write(cs, draft(CheckpointKind::incremental, PolicyKind::consecutive_increment, 1, p));
    }
    CHECK(cs.gc(1).empty());
    CHECK(cs.valid_ids().size() == 5);
    const uint64_t live = cs.live_bytes();
    // Incremental records carry an 8-byte row index (3 rows over both shards).
    CHECK(live == (32 + 40 + 8) + 4 * (32 + 40 + 8 + 3 * 8));
  }
}

TEST_CASE("gc reference rule against a brute-force oracle") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    CheckpointStore cs(std::make_shared<MemoryStore>(), "r");
    std::map<uint64_t, std::optional<uint64_t>> parent;  // id -> link it needs
    std::map<uint64_t, std::optional<uint64_t>> base;
    uint64_t last_full = 0, last = 0;
    const int n = 2 + static_cast<int>(rng() % 8);
    const bool consecutive = rng() % 2;
    const auto policy = consecutive ? PolicyKind::consecutive_increment : PolicyKind::one_shot_baseline;
    for (int i = 0; i < n; ++i) {
      uint64_t id;
      if (i == 0 || rng() % 3 == 0) {
        id = write(cs, draft(CheckpointKind::full, policy));
        last_full = id;
        base[id] = std::nullopt;
        parent[id] = std::nullopt;
      } else {
        id = write(cs, draft(CheckpointKind::incremental, policy, last_full, last));
        base[id] = last_full;
        parent[id] = consecutive ? std::optional<uint64_t>(last) : std::optional<uint64_t>(last_full);
      }
      last = id;
    }
    const uint64_t keep_n = 1 + rng() % 3;
    std::set<uint64_t> keep;
    std::vector<uint64_t> all;
    for (auto& [id, _] : base) all.push_back(id);
    for (std::size_t i = all.size() > keep_n ? all.size() - keep_n : 0; i < all.size(); ++i) {
      std::optional<uint64_t> at = all[i];
      while (at) {
        keep.insert(*at);
        at = parent[*at];
      }
      if (base[all[i]]) keep.insert(*base[all[i]]);
    }
    cs.gc(keep_n);
    CHECK(cs.valid_ids() == std::vector<uint64_t>(keep.begin(), keep.end()));
  }
}

TEST_CASE("injected io failure on a shard forbids commit") {
  auto mem = std::make_shared<MemoryStore>();
  auto faulty = std::make_shared<FaultInjectingStore>(mem);
  CheckpointStore cs(faulty, "r");
  write(cs, draft(CheckpointKind::full, PolicyKind::full_only, {}, {}, 2));

  auto d = draft(CheckpointKind::full, PolicyKind::full_only, {}, {}, 4);
  auto h = cs.begin(d);
  faulty->add_rule({1, FaultKind::io_error, ""});
  cs.put_shard(h, 0, payload(0, 2));
  CHECK_THROWS_AS(cs.put_shard(h, 1, payload(1, 2)), StoreError);
  cs.put_shard(h, 2, payload(2, 2));
  cs.put_shard(h, 3, payload(3, 2));
  cs.put_dense(h, std::vector<float>{0.0f, 0.0f});
  CHECK(h->failed());
  CHECK_THROWS_AS(cs.commit(h), PreconditionError);
  cs.abort(h);
  CHECK(mem->list("runs/r/pending/").empty());
  CHECK(cs.latest_valid() == 1u);
}

TEST_CASE("crash before the manifest leaves the previous checkpoint valid") {
  auto mem = std::make_shared<MemoryStore>();
  auto faulty = std::make_shared<FaultInjectingStore>(mem);
  {
    CheckpointStore cs(faulty, "r");
    write(cs, draft(CheckpointKind::full, PolicyKind::full_only));
    faulty->add_rule({0, FaultKind::crash, "manifest.json"});
    CHECK_THROWS_AS(write(cs, draft(CheckpointKind::full, PolicyKind::full_only)), StoreError);
    CHECK(faulty->crashed());
    CHECK_THROWS_AS(cs.latest_valid(), StoreError);
  }
  // Restart on the surviving objects.
  CheckpointStore restarted(mem, "r");
  CHECK(restarted.latest_valid() == 1u);
  CHECK(ids(restarted.verify(1)) == std::vector<uint64_t>{1});
  CHECK(write(restarted, draft(CheckpointKind::full, PolicyKind::full_only)) == 3);
  restarted.gc(1);
  CHECK(restarted.valid_ids() == std::vector<uint64_t>{3});
  CHECK(mem->list("runs/r/pending/").empty());
  CHECK(mem->list("runs/r/ckpt/0000000002/").empty());
}
