// SPDX-License-Identifier: Apache-2.0
#include "sdn/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sdn/digest.hpp"
#include "sdn/jsonw.hpp"
#include "sdn/png_io.hpp"
#include "sdn/util.hpp"

namespace sdn {

namespace fs = std::filesystem;
using nlohmann::json;

const std::array<const char*, 6> kPairFileNames = {
    "anchor.png", "sample.png", "anchor_instance.png", "aligned_instance.png", "mask.png",
    "meta.json"};

std::string split_kind_name(SplitKind k) {
  switch (k) {
    case SplitKind::train: return "train";
    case SplitKind::test_seen_pose: return "test_seen_pose";
    case SplitKind::test_novel_pose: return "test_novel_pose";
  }
  return "train";
}

SplitKind split_kind_from_name(const std::string& name) {
  if (name == "train") return SplitKind::train;
  if (name == "test_seen_pose") return SplitKind::test_seen_pose;
  if (name == "test_novel_pose") return SplitKind::test_novel_pose;
  throw ParseError("unknown split kind: " + name);
}

const ManifestRecord& Manifest::record(int64_t pair_id) const {
  for (const auto& r : records)
    if (r.pair_id == pair_id) return r;
  throw InvalidArgument("pair_id " + std::to_string(pair_id) + " not in manifest");
}

uint64_t state_pair_key(const AssemblyState& a, const AssemblyState& b) {
  uint64_t lo = std::min(a.mask, b.mask);
  uint64_t hi = std::max(a.mask, b.mask);
  return (lo << 32) | hi;
}

static uint64_t label_hash(const std::string& s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) h = (h ^ static_cast<uint8_t>(c)) * 0x100000001b3ull;
  return h;
}

static Vec3 random_light_dir(Rng& rng) {
  double elev = deg2rad(rng.uniform(30.0, 80.0));
  double azim = rng.uniform(0.0, 2.0 * kPi);
  return {std::cos(elev) * std::cos(azim), std::sin(elev), std::cos(elev) * std::sin(azim)};
}

PairRecord sample_pair_record(const PartCatalog& cat, const PairGenSpec& spec,
                              const GenConfig& cfg, int64_t pair_id,
                              const std::set<uint64_t>* excluded_state_pairs) {
  cfg.validate();
  if (spec.pose_ranges.empty()) throw InvalidArgument("split has no pose ranges");
  const int max_exclusion_attempts = 1000;
  for (int attempt = 0; attempt < max_exclusion_attempts; ++attempt) {
    Rng rng = Rng(cfg.master_seed)
                  .derive({label_hash(spec.name), static_cast<uint64_t>(pair_id),
                           static_cast<uint64_t>(attempt)});
    auto [state_a, state_b] =
        sample_state_pair(cat, spec.d_min, spec.d_max, spec.constraints, rng);
    if (excluded_state_pairs &&
        excluded_state_pairs->count(state_pair_key(state_a, state_b)))
      continue;

    size_t range_idx =
        spec.pose_ranges.size() == 1
            ? 0
            : static_cast<size_t>(rng.uniform_int(0, static_cast<int>(spec.pose_ranges.size()) - 1));
    CameraPose pose_a = sample_pose(spec.pose_ranges[range_idx], cfg.intrinsics, rng);
    CameraPose pose_b = perturb_pose(pose_a, spec.max_nqd, rng, cfg.pos_jitter_frac);

    RenderParams rp_anchor = cfg.render;
    rp_anchor.light_dir = random_light_dir(rng);
    rp_anchor.background_seed = rng.next_u64();
    RenderParams rp_sample = cfg.render;
    rp_sample.light_dir = random_light_dir(rng);
    rp_sample.background_seed = rng.next_u64();

    RenderedView anchor = rasterize(cat, state_a, pose_a, rp_anchor);
    RenderedView aligned = rasterize(cat, state_b, pose_a, rp_anchor);
    RenderedView sample = rasterize(cat, state_b, pose_b, rp_sample);
    BinaryMask mask = change_mask(anchor, aligned);

    CropWindow win = compute_crop_window(anchor.instance, cfg.crop, rng);
    int out = cfg.crop.out_size;
    PairRecord rec;
    rec.pair_id = pair_id;
    rec.split = spec.kind;
    rec.anchor.rgb = crop_rgb_bilinear(anchor.rgb, win, out);
    rec.anchor.instance = crop_u16_nearest(anchor.instance, win, out);
    rec.anchor.depth = crop_depth_nearest(anchor.depth, anchor.width(), win, out);
    rec.anchor.pose = anchor.pose;
    rec.anchor.state = state_a;
    rec.sample.rgb = crop_rgb_bilinear(sample.rgb, win, out);
    rec.sample.instance = crop_u16_nearest(sample.instance, win, out);
    rec.sample.depth = crop_depth_nearest(sample.depth, sample.width(), win, out);
    rec.sample.pose = sample.pose;
    rec.sample.state = state_b;
    rec.aligned_instance = crop_u16_nearest(aligned.instance, win, out);
    rec.mask = crop_mask_nearest(mask, win, out);
    rec.nqd_value = nqd(pose_a.orientation, pose_b.orientation);
    rec.diff = part_diff(state_a, state_b);
    return rec;
  }
  throw GenerationError("split '" + spec.name + "' pair " + std::to_string(pair_id) +
                        ": no non-excluded state pair found");
}


static std::string meta_json_text(const PairRecord& rec) {
  JsonWriter w;
  w.begin_obj();
  w.key("pair_id").num(rec.pair_id);
  w.key("state_a").num(rec.anchor.state.mask);
  w.key("state_b").num(rec.sample.state.mask);
  w.key("pose_a");
  double qa[4] = {rec.anchor.pose.orientation.w, rec.anchor.pose.orientation.x,
                  rec.anchor.pose.orientation.y, rec.anchor.pose.orientation.z};
  double pa[3] = {rec.anchor.pose.position.x, rec.anchor.pose.position.y,
                  rec.anchor.pose.position.z};
  w.begin_obj().key("quaternion").real_array(qa, 4).key("position").real_array(pa, 3).end_obj();
  w.key("pose_b");
  double qb[4] = {rec.sample.pose.orientation.w, rec.sample.pose.orientation.x,
                  rec.sample.pose.orientation.y, rec.sample.pose.orientation.z};
  double pb[3] = {rec.sample.pose.position.x, rec.sample.pose.position.y,
                  rec.sample.pose.position.z};
  w.begin_obj().key("quaternion").real_array(qb, 4).key("position").real_array(pb, 3).end_obj();
  w.key("nqd").num(rec.nqd_value);
  w.key("only_in_a").num_array(rec.diff.only_in_a);
  w.key("only_in_b").num_array(rec.diff.only_in_b);
  w.end_obj();
  return w.text();
}

static std::string manifest_line(const ManifestRecord& r) {
  JsonWriter w;
  w.begin_obj();
  w.key("pair_id").num(r.pair_id);
  w.key("split").str(split_kind_name(r.split));
  static const std::array<const char*, 6> keys = {"anchor",           "sample", "anchor_instance",
                                                  "aligned_instance", "mask",   "meta"};
  w.key("files").begin_obj();
  for (size_t i = 0; i < 6; ++i) w.key(keys[i]).str(r.paths[i]);
  w.end_obj();
  w.key("sha256").begin_obj();
  for (size_t i = 0; i < 6; ++i) w.key(keys[i]).str(r.sha256[i]);
  w.end_obj();
  w.key("state_a").num(r.state_a);
  w.key("state_b").num(r.state_b);
  w.key("pose_a");
  w.begin_obj().key("quaternion").real_array(r.quat_a.data(), 4).key("position").real_array(
      r.pos_a.data(), 3).end_obj();
  w.key("pose_b");
  w.begin_obj().key("quaternion").real_array(r.quat_b.data(), 4).key("position").real_array(
      r.pos_b.data(), 3).end_obj();
  w.key("nqd").num(r.nqd_value);
  w.key("only_in_a").num_array(r.only_in_a);
  w.key("only_in_b").num_array(r.only_in_b);
  w.end_obj();
  return w.text();
}

Manifest generate_split(const PartCatalog& cat, const PairGenSpec& spec, const GenConfig& cfg,
                        const fs::path& out_root, int jobs,
                        const std::set<uint64_t>* excluded_state_pairs) {
  if (spec.count < 1) throw InvalidArgument("split count must be >= 1");
  fs::create_directories(out_root / spec.name);
  Manifest manifest;
  manifest.split_name = spec.name;
  manifest.kind = spec.kind;
  manifest.intrinsics = cfg.intrinsics;
  manifest.records.resize(static_cast<size_t>(spec.count));

  parallel_for(spec.count, jobs, [&](int64_t i) {
    PairRecord rec = sample_pair_record(cat, spec, cfg, i, excluded_state_pairs);
    char dirname[16];
    std::snprintf(dirname, sizeof(dirname), "%08lld", static_cast<long long>(i));
    fs::path dir = out_root / spec.name / dirname;
    fs::create_directories(dir);
    std::string rel = spec.name + "/" + dirname + "/";

    std::array<std::vector<uint8_t>, 6> blobs;
    blobs[0] = encode_png_rgb8(rec.anchor.rgb);
    blobs[1] = encode_png_rgb8(rec.sample.rgb);
    blobs[2] = encode_png_gray16(rec.anchor.instance);
    blobs[3] = encode_png_gray16(rec.aligned_instance);
    blobs[4] = encode_png_mask(rec.mask);
    std::string meta = meta_json_text(rec);
    blobs[5].assign(meta.begin(), meta.end());

    ManifestRecord& mr = manifest.records[static_cast<size_t>(i)];
    mr.pair_id = i;
    mr.split = spec.kind;
    for (size_t f = 0; f < 6; ++f) {
      mr.paths[f] = rel + kPairFileNames[f];
      mr.sha256[f] = sha256_hex(blobs[f]);
      write_file((dir / kPairFileNames[f]).string(), blobs[f]);
    }
    mr.state_a = rec.anchor.state.mask;
    mr.state_b = rec.sample.state.mask;
    mr.quat_a = {rec.anchor.pose.orientation.w, rec.anchor.pose.orientation.x,
                 rec.anchor.pose.orientation.y, rec.anchor.pose.orientation.z};
    mr.pos_a = {rec.anchor.pose.position.x, rec.anchor.pose.position.y,
                rec.anchor.pose.position.z};
    mr.quat_b = {rec.sample.pose.orientation.w, rec.sample.pose.orientation.x,
                 rec.sample.pose.orientation.y, rec.sample.pose.orientation.z};
    mr.pos_b = {rec.sample.pose.position.x, rec.sample.pose.position.y,
                rec.sample.pose.position.z};
    mr.nqd_value = rec.nqd_value;
    mr.only_in_a = rec.diff.only_in_a;
    mr.only_in_b = rec.diff.only_in_b;
  });

  std::string text;
  for (const auto& r : manifest.records) {
    text += manifest_line(r);
    text += '\n';
  }
  std::vector<uint8_t> bytes(text.begin(), text.end());
  write_file((out_root / spec.name / "manifest.jsonl").string(), bytes);
  return manifest;
}

GenConfig default_gen_config(const PartCatalog& cat, uint64_t seed) {
  (void)cat;
  GenConfig cfg;
  cfg.render.image_size = 128;
  cfg.render.background = BackgroundStyle::value_noise;
  cfg.intrinsics.focal_px = 1.1 * 128;
  cfg.intrinsics.cx = 64.0;
  cfg.intrinsics.cy = 64.0;
  cfg.intrinsics.width = cfg.intrinsics.height = 128;
  cfg.crop.margin_frac = 0.10;
  cfg.crop.out_size = 64;
  cfg.crop.random_translation = true;
  cfg.master_seed = seed;
  return cfg;
}

std::vector<PairGenSpec> standard_suite_specs(const PartCatalog& cat, SuiteScale scale) {
  int train_n = scale == SuiteScale::tiny ? 512 : 8192;
  int test_n = scale == SuiteScale::tiny ? 128 : 1024;
  double radius = cat.bounding_radius();

  PoseRange train_range;
  train_range.elev_min = 30;
  train_range.elev_max = 70;
  train_range.azim_min = -60;
  train_range.azim_max = 60;
  train_range.roll_min = -10;
  train_range.roll_max = 10;
  train_range.dist_min = 3 * radius;
  train_range.dist_max = 5 * radius;

  PoseRange novel_low = train_range, novel_high = train_range;
  novel_low.elev_min = 10;
  novel_low.elev_max = 25;
  novel_low.azim_min = 90;
  novel_low.azim_max = 180;
  novel_high.elev_min = 75;
  novel_high.elev_max = 85;
  novel_high.azim_min = 90;
  novel_high.azim_max = 180;

  StateConstraints ablation;
  ablation.always_present = {cat.id_of("front_bracket")};
  ablation.never_present = {cat.id_of("pulley"), cat.id_of("wheel_4")};

  std::vector<PairGenSpec> specs;
  specs.push_back({"train", SplitKind::train, train_n, 1, 6, 0.1, {train_range}, {}});
  specs.push_back(
      {"test_seen_pose", SplitKind::test_seen_pose, test_n, 1, 10, 0.4, {train_range}, {}});
  specs.push_back({"test_novel_pose", SplitKind::test_novel_pose, test_n, 1, 10, 0.4,
                   {novel_low, novel_high}, {}});
  specs.push_back(
      {"ablation_train", SplitKind::train, train_n, 1, 6, 0.1, {train_range}, ablation});
  specs.push_back({"train_aligned", SplitKind::train, train_n, 1, 6, 0.0, {train_range}, {}});
  specs.push_back({"test_seen_pose_aligned", SplitKind::test_seen_pose, test_n, 1, 10, 0.0,
                   {train_range}, {}});
  return specs;
}

std::map<std::string, Manifest> build_standard_suites(const PartCatalog& cat,
                                                      const fs::path& out_root, SuiteScale scale,
                                                      uint64_t seed, int jobs) {
  GenConfig cfg = default_gen_config(cat, seed);
  auto specs = standard_suite_specs(cat, scale);
  fs::create_directories(out_root);

  // dataset.json: generation echo needed to reinterpret the files
  {
    JsonWriter w;
    w.begin_obj();
    w.key("scale").str(scale == SuiteScale::tiny ? "tiny" : "small");
    w.key("seed").num(seed);
    w.key("catalog_parts").num(cat.part_count());
    w.key("render_size").num(cfg.render.image_size);
    w.key("crop_size").num(cfg.crop.out_size);
    w.key("margin_frac").num(cfg.crop.margin_frac);
    w.key("intrinsics");
    w.begin_obj()
        .key("focal_px")
        .num(cfg.intrinsics.focal_px)
        .key("cx")
        .num(cfg.intrinsics.cx)
        .key("cy")
        .num(cfg.intrinsics.cy)
        .key("width")
        .num(cfg.intrinsics.width)
        .key("height")
        .num(cfg.intrinsics.height)
        .end_obj();
    w.key("splits").begin_arr();
    for (const auto& s : specs) w.str(s.name);
    w.end_arr();
    w.end_obj();
    std::string text = w.text() + "\n";
    write_file((out_root / "dataset.json").string(), std::vector<uint8_t>(text.begin(), text.end()));
  }

  std::map<std::string, Manifest> out;
  std::set<uint64_t> train_pairs, train_aligned_pairs;
  for (const auto& spec : specs) {
    const std::set<uint64_t>* excluded = nullptr;
    if (spec.name == "test_seen_pose") excluded = &train_pairs;
    if (spec.name == "test_seen_pose_aligned") excluded = &train_aligned_pairs;
    Manifest m = generate_split(cat, spec, cfg, out_root, jobs, excluded);
    if (spec.name == "train")
      for (const auto& r : m.records)
        train_pairs.insert(state_pair_key(AssemblyState{r.state_a}, AssemblyState{r.state_b}));
    if (spec.name == "train_aligned")
      for (const auto& r : m.records)
        train_aligned_pairs.insert(
            state_pair_key(AssemblyState{r.state_a}, AssemblyState{r.state_b}));
    out.emplace(spec.name, std::move(m));
  }
  return out;
}

Manifest load_manifest(const fs::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest: " + manifest_path.string());
  Manifest m;
  m.split_name = manifest_path.parent_path().filename().string();
  std::string line;
  static const std::array<const char*, 6> keys = {"anchor",           "sample", "anchor_instance",
                                                  "aligned_instance", "mask",   "meta"};
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError("manifest line parse error: " + std::string(e.what()));
    }
    ManifestRecord r;
    r.pair_id = j.at("pair_id").get<int64_t>();
    r.split = split_kind_from_name(j.at("split").get<std::string>());
    for (size_t i = 0; i < 6; ++i) {
      r.paths[i] = j.at("files").at(keys[i]).get<std::string>();
      r.sha256[i] = j.at("sha256").at(keys[i]).get<std::string>();
    }
    r.state_a = j.at("state_a").get<uint32_t>();
    r.state_b = j.at("state_b").get<uint32_t>();
    for (int i = 0; i < 4; ++i) {
      r.quat_a[static_cast<size_t>(i)] = j.at("pose_a").at("quaternion").at(i).get<double>();
      r.quat_b[static_cast<size_t>(i)] = j.at("pose_b").at("quaternion").at(i).get<double>();
    }
    for (int i = 0; i < 3; ++i) {
      r.pos_a[static_cast<size_t>(i)] = j.at("pose_a").at("position").at(i).get<double>();
      r.pos_b[static_cast<size_t>(i)] = j.at("pose_b").at("position").at(i).get<double>();
    }
    r.nqd_value = j.at("nqd").get<double>();
    r.only_in_a = j.at("only_in_a").get<std::vector<int>>();
    r.only_in_b = j.at("only_in_b").get<std::vector<int>>();
    m.records.push_back(std::move(r));
  }
  if (!m.records.empty()) m.kind = m.records.front().split;
  // intrinsics echo from dataset.json one level up, when present
  fs::path ds = manifest_path.parent_path().parent_path() / "dataset.json";
  if (fs::exists(ds)) {
    std::ifstream dsin(ds);
    json j = json::parse(dsin, nullptr, true);
    const auto& ji = j.at("intrinsics");
    m.intrinsics.focal_px = ji.at("focal_px").get<double>();
    m.intrinsics.cx = ji.at("cx").get<double>();
    m.intrinsics.cy = ji.at("cy").get<double>();
    m.intrinsics.width = ji.at("width").get<int>();
    m.intrinsics.height = ji.at("height").get<int>();
  }
  return m;
}

PairRecord load_pair(const Manifest& manifest, const fs::path& dataset_root, int64_t pair_id) {
  const ManifestRecord& r = manifest.record(pair_id);
  std::array<std::vector<uint8_t>, 6> blobs;
  for (size_t i = 0; i < 6; ++i) {
    fs::path p = dataset_root / r.paths[i];
    if (!fs::exists(p)) throw IoError("missing pair file: " + p.string());
    blobs[i] = read_file(p.string());
    std::string got = sha256_hex(blobs[i]);
    if (got != r.sha256[i])
      throw ChecksumError("checksum mismatch for " + p.string() + ": manifest " + r.sha256[i] +
                          ", file " + got);
  }
  PairRecord rec;
  rec.pair_id = r.pair_id;
  rec.split = r.split;
  rec.anchor.rgb = decode_png_rgb8(blobs[0]);
  rec.sample.rgb = decode_png_rgb8(blobs[1]);
  rec.anchor.instance = decode_png_gray16(blobs[2]);
  rec.aligned_instance = decode_png_gray16(blobs[3]);
  rec.mask = decode_png_mask(blobs[4]);
  rec.anchor.state = AssemblyState{r.state_a};
  rec.sample.state = AssemblyState{r.state_b};
  rec.anchor.pose.orientation = {r.quat_a[0], r.quat_a[1], r.quat_a[2], r.quat_a[3]};
  rec.anchor.pose.position = {r.pos_a[0], r.pos_a[1], r.pos_a[2]};
  rec.anchor.pose.intrinsics = manifest.intrinsics;
  rec.sample.pose.orientation = {r.quat_b[0], r.quat_b[1], r.quat_b[2], r.quat_b[3]};
  rec.sample.pose.position = {r.pos_b[0], r.pos_b[1], r.pos_b[2]};
  rec.sample.pose.intrinsics = manifest.intrinsics;
  rec.nqd_value = r.nqd_value;
  rec.diff.only_in_a = r.only_in_a;
  rec.diff.only_in_b = r.only_in_b;
  return rec;
}

std::vector<PairRecord> load_all_pairs(const Manifest& manifest, const fs::path& dataset_root,
                                       int jobs) {
  std::vector<PairRecord> out(manifest.records.size());
  parallel_for(static_cast<int64_t>(manifest.records.size()), jobs, [&](int64_t i) {
    out[static_cast<size_t>(i)] =
        load_pair(manifest, dataset_root, manifest.records[static_cast<size_t>(i)].pair_id);
  });
  return out;
}

PairRecord augment_pair(const PairRecord& rec, const AugmentConfig& cfg, Rng& rng) {
  PairRecord out = rec;
  // depth is not resampled; drop it rather than keep stale values
  if (cfg.rot90 || cfg.max_angle_degrees > 0 || cfg.hflip || cfg.vflip) {
    out.anchor.depth.clear();
    out.sample.depth.clear();
  }
  int k = cfg.rot90 ? static_cast<int>(rng.uniform_int(0, 3)) : 0;
  double angle = cfg.max_angle_degrees > 0
                     ? deg2rad(rng.uniform(-cfg.max_angle_degrees, cfg.max_angle_degrees))
                     : 0.0;
  bool fh = cfg.hflip && rng.uniform() < 0.5;
  bool fv = cfg.vflip && rng.uniform() < 0.5;

  auto geom_rgb = [&](ImageRGB& img) {
    apply_rot90(img, k);
    apply_rotation(img, angle);
    apply_flip(img, fh, fv);
  };
  auto geom_u16 = [&](ImageU16& img) {
    apply_rot90(img, k);
    apply_rotation(img, angle);
    apply_flip(img, fh, fv);
  };
  geom_rgb(out.anchor.rgb);
  geom_rgb(out.sample.rgb);
  geom_u16(out.anchor.instance);
  geom_u16(out.sample.instance);
  geom_u16(out.aligned_instance);
  apply_rot90(out.mask, k);
  apply_rotation(out.mask, angle);
  apply_flip(out.mask, fh, fv);

  for (ImageRGB* img : {&out.anchor.rgb, &out.sample.rgb}) {
    double hue = cfg.hue_degrees > 0 ? rng.uniform(-cfg.hue_degrees, cfg.hue_degrees) : 0.0;
    double bright = cfg.brightness > 0 ? rng.uniform(-cfg.brightness, cfg.brightness) : 0.0;
    double contrast =
        cfg.contrast > 0 ? rng.uniform(1.0 - cfg.contrast, 1.0 + cfg.contrast) : 1.0;
    apply_color_jitter(*img, hue, bright, contrast);
    double sigma = cfg.blur_sigma_max > 0 ? rng.uniform(0.0, cfg.blur_sigma_max) : 0.0;
    apply_gaussian_blur(*img, sigma);
  }
  return out;
}

}  // namespace sdn
