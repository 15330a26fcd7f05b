// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sdn/dataset.hpp"

namespace sdn::testutil {

inline GenConfig micro_gen_config(uint64_t seed, int render_size = 128, int crop_size = 64) {
  PartCatalog cat = default_catalog();
  GenConfig cfg = default_gen_config(cat, seed);
  cfg.render.image_size = render_size;
  cfg.intrinsics.focal_px = 1.1 * render_size;
  cfg.intrinsics.cx = cfg.intrinsics.cy = render_size / 2.0;
  cfg.intrinsics.width = cfg.intrinsics.height = render_size;
  cfg.crop.out_size = crop_size;
  return cfg;
}

inline PairGenSpec micro_spec(const std::string& name, int count, double max_nqd = 0.1,
                              int d_min = 1, int d_max = 6) {
  PartCatalog cat = default_catalog();
  PoseRange range;
  range.dist_min = 3 * cat.bounding_radius();
  range.dist_max = 5 * cat.bounding_radius();
  PairGenSpec spec;
  spec.name = name;
  spec.count = count;
  spec.d_min = d_min;
  spec.d_max = d_max;
  spec.max_nqd = max_nqd;
  spec.pose_ranges = {range};
  return spec;
}

inline std::vector<PairRecord> make_micro_records(int count, double max_nqd, uint64_t seed,
                                                  int d_min = 1, int d_max = 6) {
  PartCatalog cat = default_catalog();
  GenConfig cfg = micro_gen_config(seed);
  PairGenSpec spec = micro_spec("micro", count, max_nqd, d_min, d_max);
  std::vector<PairRecord> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(sample_pair_record(cat, spec, cfg, i));
  return out;
}

inline std::filesystem::path fresh_dir(const std::string& tag) {
  auto dir = std::filesystem::temp_directory_path() / ("sdn_test_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace sdn::testutil
