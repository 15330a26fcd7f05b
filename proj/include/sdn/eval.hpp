// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "sdn/dataset.hpp"
#include "sdn/image.hpp"

namespace sdn {

template <typename T>
class ModelT;

// Change-class IoU: |pred & gt| / |pred | gt|. Both masks empty -> 1.0.
double change_iou(const BinaryMask& pred, const BinaryMask& gt);

// Quantile with linear interpolation at rank (n-1)*p over sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p);

struct StrataConfig {
  std::vector<double> nqd_edges{0.0, 0.1, 0.2, 0.3, 0.4};  // first bin closed, others (lo, hi]
  std::vector<std::pair<int, int>> diff_bins{{1, 3}, {4, 6}, {7, 10}};  // inclusive
};

struct PairRow {
  int64_t pair_id = 0;
  std::string split;
  double nqd = 0;
  int diff_count = 0;
  int only_in_a = 0, only_in_b = 0;
  double iou = 0;
  double iou_anchor_origin = 0;  // IoU restricted to pixels of parts only in the anchor
  double iou_sample_origin = 0;  // ... only in the sample
};

struct Aggregate {
  std::string metric;   // iou | iou_anchor_origin | iou_sample_origin
  std::string stratum;  // all | nqd_bin | diff_bin | nqd_diff
  std::string key;
  int count = 0;
  double mean = 0, median = 0, q1 = 0, q3 = 0;  // undefined when count == 0
};

struct PanelImage {
  int64_t pair_id = 0;
  ImageRGB image;  // anchor | sample | gt | prediction
};

struct EvalReport {
  std::vector<PairRow> rows;          // sorted by pair_id
  std::vector<Aggregate> aggregates;  // fixed order
  std::vector<PanelImage> panels;
};

using Predictor = std::function<std::vector<BinaryMask>(const std::vector<const PairRecord*>&)>;

Predictor model_predictor(const ModelT<float>& model, int batch_size = 16);
Predictor zero_predictor();
Predictor perfect_predictor();  // echoes the ground truth

EvalReport evaluate(const Predictor& predict, const std::vector<PairRecord>& records,
                    const StrataConfig& strata = {}, int panel_count = 8, int batch_size = 16);

// rows.csv, aggregates.csv, one box-plot SVG per stratum family, and PNG
// panels (anchor | sample | gt | prediction).
void emit_report(const EvalReport& report, const std::filesystem::path& out_dir);

// Recomputes all aggregates from rows (used for self-consistency checks).
std::vector<Aggregate> aggregate_rows(const std::vector<PairRow>& rows,
                                      const StrataConfig& strata);

std::vector<PairRow> parse_rows_csv(const std::filesystem::path& path);

}  // namespace sdn
