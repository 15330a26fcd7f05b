// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>

#include "sdn/dataset.hpp"
#include "sdn/digest.hpp"
#include "sdn/png_io.hpp"
#include "sdn/render.hpp"
#include "test_util.hpp"

using namespace sdn;
namespace fs = std::filesystem;

namespace {
std::string slurp(const fs::path& p) {
  auto bytes = read_file(p.string());
  return std::string(bytes.begin(), bytes.end());
}
}  // namespace

TEST_CASE("generate_split is deterministic and worker-count independent") {
  PartCatalog cat = default_catalog();
  GenConfig cfg = testutil::micro_gen_config(7);
  PairGenSpec spec = testutil::micro_spec("train", 8);

  auto root1 = testutil::fresh_dir("gen1");
  auto root2 = testutil::fresh_dir("gen2");
  generate_split(cat, spec, cfg, root1, /*jobs=*/1);
  generate_split(cat, spec, cfg, root2, /*jobs=*/4);

  CHECK(slurp(root1 / "train/manifest.jsonl") == slurp(root2 / "train/manifest.jsonl"));
  for (int i = 0; i < 8; ++i) {
    char dir[16];
    std::snprintf(dir, sizeof(dir), "%08d", i);
    for (const char* f : {"anchor.png", "mask.png", "anchor_instance.png", "meta.json"})
      CHECK(read_file((root1 / "train" / dir / f).string()) ==
            read_file((root2 / "train" / dir / f).string()));
  }
  fs::remove_all(root1);
  fs::remove_all(root2);
}

TEST_CASE("persisted records reload and verify") {
  PartCatalog cat = default_catalog();
  GenConfig cfg = testutil::micro_gen_config(13);
  PairGenSpec spec = testutil::micro_spec("train", 6);
  auto root = testutil::fresh_dir("roundtrip");
  Manifest manifest = generate_split(cat, spec, cfg, root, 2);

  SUBCASE("round-trip equals the in-memory record") {
    for (int i = 0; i < 6; ++i) {
      PairRecord mem = sample_pair_record(cat, spec, cfg, i);
      PairRecord disk = load_pair(manifest, root, i);
      CHECK(disk.anchor.rgb.pixels == mem.anchor.rgb.pixels);
      CHECK(disk.sample.rgb.pixels == mem.sample.rgb.pixels);
      CHECK(disk.anchor.instance.pixels == mem.anchor.instance.pixels);
      CHECK(disk.aligned_instance.pixels == mem.aligned_instance.pixels);
      CHECK(disk.mask.values == mem.mask.values);
      CHECK(disk.anchor.state.mask == mem.anchor.state.mask);
      CHECK(disk.sample.state.mask == mem.sample.state.mask);
      CHECK(disk.nqd_value == mem.nqd_value);
      CHECK(disk.diff.only_in_a == mem.diff.only_in_a);
      CHECK(disk.diff.only_in_b == mem.diff.only_in_b);
    }
  }

  SUBCASE("stored mask equals change_mask recomputed from stored instance maps") {
    for (int i = 0; i < 6; ++i) {
      PairRecord rec = load_pair(manifest, root, i);
      for (size_t p = 0; p < rec.mask.values.size(); ++p) {
        uint8_t want = rec.anchor.instance.pixels[p] != rec.aligned_instance.pixels[p] ? 1 : 0;
        REQUIRE(rec.mask.values[p] == want);
      }
    }
  }

  SUBCASE("stored nqd matches recomputation from stored quaternions") {
    for (int i = 0; i < 6; ++i) {
      PairRecord rec = load_pair(manifest, root, i);
      double re = nqd(rec.anchor.pose.orientation, rec.sample.pose.orientation);
      CHECK(std::abs(re - rec.nqd_value) < 1e-9);
    }
  }

  SUBCASE("corrupted file fails the checksum") {
    fs::path mask_path = root / manifest.record(2).paths[4];
    auto bytes = read_file(mask_path.string());
    bytes[bytes.size() / 2] ^= 0xFF;
    write_file(mask_path.string(), bytes);
    CHECK_THROWS_AS(load_pair(manifest, root, 2), ChecksumError);
  }

  SUBCASE("missing file is reported") {
    fs::remove(root / manifest.record(3).paths[0]);
    CHECK_THROWS_AS(load_pair(manifest, root, 3), IoError);
  }
  fs::remove_all(root);
}

TEST_CASE("aligned config produces identical poses; bounds hold") {
  PartCatalog cat = default_catalog();
  GenConfig cfg = testutil::micro_gen_config(19);

  SUBCASE("max_nqd = 0: anchor and sample poses identical") {
    PairGenSpec spec = testutil::micro_spec("aligned", 5, 0.0);
    for (int i = 0; i < 5; ++i) {
      PairRecord rec = sample_pair_record(cat, spec, cfg, i);
      CHECK(rec.nqd_value == 0.0);
      CHECK(rec.anchor.pose.orientation.w == rec.sample.pose.orientation.w);
      CHECK(rec.anchor.pose.position.x == rec.sample.pose.position.x);
    }
  }

  SUBCASE("train bounds: d in [1,6], nqd <= 0.1") {
    PairGenSpec spec = testutil::micro_spec("train", 24, 0.1, 1, 6);
    for (int i = 0; i < 24; ++i) {
      PairRecord rec = sample_pair_record(cat, spec, cfg, i);
      CHECK(rec.diff.count() >= 1);
      CHECK(rec.diff.count() <= 6);
      CHECK(rec.nqd_value <= 0.1);
    }
  }

  SUBCASE("constraints flow through generation") {
    PairGenSpec spec = testutil::micro_spec("ablation", 8);
    spec.constraints.always_present = {cat.id_of("front_bracket")};
    spec.constraints.never_present = {cat.id_of("pulley"), cat.id_of("wheel_4")};
    for (int i = 0; i < 8; ++i) {
      PairRecord rec = sample_pair_record(cat, spec, cfg, i);
      for (const AssemblyState* s : {&rec.anchor.state, &rec.sample.state}) {
        CHECK(s->contains(cat.id_of("front_bracket")));
        CHECK(!s->contains(cat.id_of("pulley")));
        CHECK(!s->contains(cat.id_of("wheel_4")));
      }
    }
  }
}

TEST_CASE("state-pair exclusion keeps test pairs out of the train set") {
  PartCatalog cat = default_catalog();
  GenConfig cfg = testutil::micro_gen_config(23);
  PairGenSpec train_spec = testutil::micro_spec("train", 32);
  std::set<uint64_t> train_pairs;
  for (int i = 0; i < 32; ++i) {
    PairRecord rec = sample_pair_record(cat, train_spec, cfg, i);
    train_pairs.insert(state_pair_key(rec.anchor.state, rec.sample.state));
  }
  PairGenSpec test_spec = testutil::micro_spec("test_seen_pose", 32, 0.4, 1, 10);
  test_spec.kind = SplitKind::test_seen_pose;
  for (int i = 0; i < 32; ++i) {
    PairRecord rec = sample_pair_record(cat, test_spec, cfg, i, &train_pairs);
    CHECK(train_pairs.count(state_pair_key(rec.anchor.state, rec.sample.state)) == 0);
  }
}

TEST_CASE("standard suites: novel poses disjoint from the training band") {
  PartCatalog cat = default_catalog();
  auto specs = standard_suite_specs(cat, SuiteScale::tiny);
  CHECK(specs.size() == 6);
  const PairGenSpec* train = nullptr;
  const PairGenSpec* novel = nullptr;
  for (const auto& s : specs) {
    if (s.name == "train") train = &s;
    if (s.name == "test_novel_pose") novel = &s;
    if (s.name == "train" || s.name == "ablation_train" || s.name == "train_aligned")
      CHECK(s.count == 512);
    else
      CHECK(s.count == 128);
  }
  REQUIRE(train);
  REQUIRE(novel);
  const PoseRange& t = train->pose_ranges[0];
  for (const PoseRange& r : novel->pose_ranges) {
    bool elev_disjoint = r.elev_max < t.elev_min || r.elev_min > t.elev_max;
    bool azim_disjoint = r.azim_max < t.azim_min || r.azim_min > t.azim_max;
    CHECK(elev_disjoint);
    CHECK(azim_disjoint);
  }
  // generated novel poses land outside the training intervals
  GenConfig cfg = testutil::micro_gen_config(29);
  PairGenSpec probe = *novel;
  probe.count = 16;
  for (int i = 0; i < 16; ++i) {
    PairRecord rec = sample_pair_record(cat, probe, cfg, i);
    const Vec3& p = rec.anchor.pose.position;
    double elev = rad2deg(std::asin(p.y / p.norm()));
    double azim = rad2deg(std::atan2(p.z, p.x));
    bool in_train_elev = elev >= t.elev_min - 1e-9 && elev <= t.elev_max + 1e-9;
    bool in_train_azim = azim >= t.azim_min - 1e-9 && azim <= t.azim_max + 1e-9;
    CHECK(!in_train_elev);
    CHECK(!in_train_azim);
  }
}

TEST_CASE("manifest quaternions round-trip with full precision") {
  PartCatalog cat = default_catalog();
  GenConfig cfg = testutil::micro_gen_config(37);
  PairGenSpec spec = testutil::micro_spec("train", 3);
  auto root = testutil::fresh_dir("quatprec");
  Manifest manifest = generate_split(cat, spec, cfg, root, 1);
  Manifest reloaded = load_manifest(root / "train/manifest.jsonl");
  REQUIRE(reloaded.records.size() == 3);
  for (int i = 0; i < 3; ++i) {
    PairRecord mem = sample_pair_record(cat, spec, cfg, i);
    const ManifestRecord& r = reloaded.records[static_cast<size_t>(i)];
    CHECK(r.quat_a[0] == mem.anchor.pose.orientation.w);
    CHECK(r.quat_a[1] == mem.anchor.pose.orientation.x);
    CHECK(r.quat_b[3] == mem.sample.pose.orientation.z);
    CHECK(r.pos_b[2] == mem.sample.pose.position.z);
    CHECK(r.nqd_value == mem.nqd_value);
  }
  fs::remove_all(root);
}
