// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sdn/render.hpp"

namespace sdn {

enum class SplitKind { train, test_seen_pose, test_novel_pose };

std::string split_kind_name(SplitKind k);
SplitKind split_kind_from_name(const std::string& name);

// One training/eval unit: anchor view, sample view, the change mask computed at
// the anchor pose, and metadata. aligned_instance is the instance map of the
// sample state rendered at the anchor pose (the mask's second input).
struct PairRecord {
  int64_t pair_id = 0;
  SplitKind split = SplitKind::train;
  RenderedView anchor;
  RenderedView sample;
  ImageU16 aligned_instance;
  BinaryMask mask;
  double nqd_value = 0;
  PartDiff diff;
};

// Generation parameters for one split.
struct PairGenSpec {
  std::string name;  // directory name under the dataset root
  SplitKind kind = SplitKind::train;
  int count = 1;
  int d_min = 1, d_max = 6;
  double max_nqd = 0.1;
  std::vector<PoseRange> pose_ranges;  // sampled uniformly among ranges
  StateConstraints constraints;
};

struct GenConfig {
  RenderParams render;             // light/background fields are re-randomized per pair
  CameraIntrinsics intrinsics;
  CropSpec crop;
  double pos_jitter_frac = 0.2;
  uint64_t master_seed = 0;

  void validate() const {
    render.validate();
    if (crop.out_size < 16) throw InvalidArgument("crop output size too small");
  }
};

struct ManifestRecord {
  int64_t pair_id = 0;
  SplitKind split = SplitKind::train;
  // relative paths + sha256, keyed: anchor, sample, anchor_instance,
  // aligned_instance, mask, meta
  std::array<std::string, 6> paths;
  std::array<std::string, 6> sha256;
  uint32_t state_a = 0, state_b = 0;
  std::array<double, 4> quat_a{1, 0, 0, 0}, quat_b{1, 0, 0, 0};
  std::array<double, 3> pos_a{0, 0, 0}, pos_b{0, 0, 0};
  double nqd_value = 0;
  std::vector<int> only_in_a, only_in_b;
};

extern const std::array<const char*, 6> kPairFileNames;

struct Manifest {
  std::string split_name;
  SplitKind kind = SplitKind::train;
  CameraIntrinsics intrinsics;  // echoed from dataset.json when present
  std::vector<ManifestRecord> records;

  const ManifestRecord& record(int64_t pair_id) const;
};

// Unordered state-pair key used to keep train and test-seen-pose disjoint.
uint64_t state_pair_key(const AssemblyState& a, const AssemblyState& b);

// Deterministically samples pair `pair_id` of a split: states, poses, three
// renders, change mask, ROI crop. Pure function of (catalog, spec, cfg,
// pair_id, excluded); no I/O.
PairRecord sample_pair_record(const PartCatalog& cat, const PairGenSpec& spec,
                              const GenConfig& cfg, int64_t pair_id,
                              const std::set<uint64_t>* excluded_state_pairs = nullptr);

// Generates spec.count pairs under out_root/spec.name and writes the per-split
// manifest.jsonl. Parallel over pair ids; output is byte-identical for any
// `jobs`. Returns the manifest (records in pair_id order).
Manifest generate_split(const PartCatalog& cat, const PairGenSpec& spec, const GenConfig& cfg,
                        const std::filesystem::path& out_root, int jobs,
                        const std::set<uint64_t>* excluded_state_pairs = nullptr);

enum class SuiteScale { tiny, small };

// Standard suite family: train, test_seen_pose, test_novel_pose,
// ablation_train, train_aligned, test_seen_pose_aligned.
std::vector<PairGenSpec> standard_suite_specs(const PartCatalog& cat, SuiteScale scale);

std::map<std::string, Manifest> build_standard_suites(const PartCatalog& cat,
                                                      const std::filesystem::path& out_root,
                                                      SuiteScale scale, uint64_t seed, int jobs);

GenConfig default_gen_config(const PartCatalog& cat, uint64_t seed);

Manifest load_manifest(const std::filesystem::path& manifest_path);

// Reads a persisted pair back; verifies every checksum.
PairRecord load_pair(const Manifest& manifest, const std::filesystem::path& dataset_root,
                     int64_t pair_id);

std::vector<PairRecord> load_all_pairs(const Manifest& manifest,
                                       const std::filesystem::path& dataset_root, int jobs);

// Photometric jitter per image, one shared geometric transform for the whole
// record, Gaussian blur per image. The mask stays binary and aligned to the
// anchor. All-identity config returns a byte-identical copy.
PairRecord augment_pair(const PairRecord& rec, const AugmentConfig& cfg, Rng& rng);

}  // namespace sdn
