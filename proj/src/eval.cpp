// SPDX-License-Identifier: Apache-2.0
#include "sdn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sdn/model.hpp"
#include "sdn/png_io.hpp"

namespace sdn {

double change_iou(const BinaryMask& pred, const BinaryMask& gt) {
  if (pred.width != gt.width || pred.height != gt.height)
    throw ShapeError("change_iou: mask sizes differ");
  int64_t inter = 0, uni = 0;
  for (size_t i = 0; i < pred.values.size(); ++i) {
    uint8_t p = pred.values[i], g = gt.values[i];
    if (p > 1 || g > 1) throw ValidationError("change_iou: mask is not binary");
    inter += p & g;
    uni += p | g;
  }
  if (uni == 0) return 1.0;  // both empty: declared convention
  return static_cast<double>(inter) / static_cast<double>(uni);
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw InvalidArgument("quantile of empty data");
  if (sorted.size() == 1) return sorted[0];
  double rank = p * static_cast<double>(sorted.size() - 1);
  size_t lo = static_cast<size_t>(std::floor(rank));
  size_t hi = std::min(lo + 1, sorted.size() - 1);
  double frac = rank - static_cast<double>(lo);
  return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

Predictor model_predictor(const ModelT<float>& model, int batch_size) {
  (void)batch_size;
  return [&model](const std::vector<const PairRecord*>& batch) {
    return predict_masks(model, batch);
  };
}

Predictor zero_predictor() {
  return [](const std::vector<const PairRecord*>& batch) {
    std::vector<BinaryMask> out;
    out.reserve(batch.size());
    for (const PairRecord* r : batch) out.emplace_back(r->mask.width, r->mask.height);
    return out;
  };
}

Predictor perfect_predictor() {
  return [](const std::vector<const PairRecord*>& batch) {
    std::vector<BinaryMask> out;
    out.reserve(batch.size());
    for (const PairRecord* r : batch) out.push_back(r->mask);
    return out;
  };
}

namespace {

// IoU restricted to a footprint: both masks intersected with it first.
double restricted_iou(const BinaryMask& pred, const BinaryMask& gt, const BinaryMask& fp) {
  int64_t inter = 0, uni = 0;
  for (size_t i = 0; i < pred.values.size(); ++i) {
    uint8_t f = fp.values[i];
    uint8_t p = pred.values[i] & f, g = gt.values[i] & f;
    inter += p & g;
    uni += p | g;
  }
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

BinaryMask origin_footprint(const ImageU16& labels, const std::vector<int>& part_ids) {
  uint32_t bits = 0;
  for (int id : part_ids) bits |= 1u << (id - 1);
  BinaryMask fp(labels.width, labels.height);
  for (size_t i = 0; i < labels.pixels.size(); ++i) {
    uint16_t id = labels.pixels[i];
    fp.values[i] = (id != 0 && (bits & (1u << (id - 1)))) ? 1 : 0;
  }
  return fp;
}

std::string format_real(double v) {
  char tmp[40];
  std::snprintf(tmp, sizeof(tmp), "%.17g", v);
  return tmp;
}

std::string format_short(double v) {
  char tmp[32];
  std::snprintf(tmp, sizeof(tmp), "%g", v);
  return tmp;
}

int nqd_bin_of(double nqd, const std::vector<double>& edges) {
  if (nqd < edges.front()) return -1;
  for (size_t i = 0; i + 1 < edges.size(); ++i) {
    bool in = i == 0 ? (nqd >= edges[0] && nqd <= edges[1]) : (nqd > edges[i] && nqd <= edges[i + 1]);
    if (in) return static_cast<int>(i);
  }
  return -1;
}

std::string nqd_bin_key(const std::vector<double>& edges, int bin) {
  std::string open = bin == 0 ? "[" : "(";
  return open + format_short(edges[static_cast<size_t>(bin)]) + "," +
         format_short(edges[static_cast<size_t>(bin) + 1]) + "]";
}

int diff_bin_of(int d, const std::vector<std::pair<int, int>>& bins) {
  for (size_t i = 0; i < bins.size(); ++i)
    if (d >= bins[i].first && d <= bins[i].second) return static_cast<int>(i);
  return -1;
}

std::string diff_bin_key(const std::pair<int, int>& bin) {
  return std::to_string(bin.first) + "-" + std::to_string(bin.second);
}

Aggregate make_aggregate(const std::string& metric, const std::string& stratum,
                         const std::string& key, std::vector<double> values) {
  Aggregate a;
  a.metric = metric;
  a.stratum = stratum;
  a.key = key;
  a.count = static_cast<int>(values.size());
  if (a.count == 0) return a;
  double sum = 0;
  for (double v : values) sum += v;
  a.mean = sum / a.count;
  std::sort(values.begin(), values.end());
  a.median = quantile_sorted(values, 0.5);
  a.q1 = quantile_sorted(values, 0.25);
  a.q3 = quantile_sorted(values, 0.75);
  return a;
}

double metric_of(const PairRow& r, int metric) {
  return metric == 0 ? r.iou : metric == 1 ? r.iou_anchor_origin : r.iou_sample_origin;
}

const char* kMetricNames[3] = {"iou", "iou_anchor_origin", "iou_sample_origin"};

}  // namespace

std::vector<Aggregate> aggregate_rows(const std::vector<PairRow>& rows,
                                      const StrataConfig& strata) {
  std::vector<Aggregate> out;
  const int nqd_bins = static_cast<int>(strata.nqd_edges.size()) - 1;
  for (int metric = 0; metric < 3; ++metric) {
    const char* mname = kMetricNames[metric];
    {
      std::vector<double> vals;
      for (const auto& r : rows) vals.push_back(metric_of(r, metric));
      out.push_back(make_aggregate(mname, "all", "all", std::move(vals)));
    }
    for (int b = 0; b < nqd_bins; ++b) {
      std::vector<double> vals;
      for (const auto& r : rows)
        if (nqd_bin_of(r.nqd, strata.nqd_edges) == b) vals.push_back(metric_of(r, metric));
      out.push_back(make_aggregate(mname, "nqd_bin", nqd_bin_key(strata.nqd_edges, b),
                                   std::move(vals)));
    }
    for (size_t d = 0; d < strata.diff_bins.size(); ++d) {
      std::vector<double> vals;
      for (const auto& r : rows)
        if (diff_bin_of(r.diff_count, strata.diff_bins) == static_cast<int>(d))
          vals.push_back(metric_of(r, metric));
      out.push_back(
          make_aggregate(mname, "diff_bin", diff_bin_key(strata.diff_bins[d]), std::move(vals)));
    }
    for (int b = 0; b < nqd_bins; ++b)
      for (size_t d = 0; d < strata.diff_bins.size(); ++d) {
        std::vector<double> vals;
        for (const auto& r : rows)
          if (nqd_bin_of(r.nqd, strata.nqd_edges) == b &&
              diff_bin_of(r.diff_count, strata.diff_bins) == static_cast<int>(d))
            vals.push_back(metric_of(r, metric));
        out.push_back(make_aggregate(mname, "nqd_diff",
                                     nqd_bin_key(strata.nqd_edges, b) + "|" +
                                         diff_bin_key(strata.diff_bins[d]),
                                     std::move(vals)));
      }
  }
  return out;
}

EvalReport evaluate(const Predictor& predict, const std::vector<PairRecord>& records,
                    const StrataConfig& strata, int panel_count, int batch_size) {
  EvalReport report;
  std::vector<size_t> order(records.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return records[a].pair_id < records[b].pair_id; });

  std::vector<BinaryMask> predictions(records.size());
  for (size_t begin = 0; begin < order.size(); begin += static_cast<size_t>(batch_size)) {
    size_t count = std::min(static_cast<size_t>(batch_size), order.size() - begin);
    std::vector<const PairRecord*> batch;
    for (size_t i = 0; i < count; ++i) batch.push_back(&records[order[begin + i]]);
    auto masks = predict(batch);
    if (masks.size() != count) throw ValidationError("predictor returned a wrong-sized batch");
    for (size_t i = 0; i < count; ++i) predictions[order[begin + i]] = std::move(masks[i]);
  }

  for (size_t oi = 0; oi < order.size(); ++oi) {
    const PairRecord& rec = records[order[oi]];
    const BinaryMask& pred = predictions[order[oi]];
    pred.check_binary();
    PairRow row;
    row.pair_id = rec.pair_id;
    row.split = split_kind_name(rec.split);
    row.nqd = rec.nqd_value;
    row.diff_count = rec.diff.count();
    row.only_in_a = static_cast<int>(rec.diff.only_in_a.size());
    row.only_in_b = static_cast<int>(rec.diff.only_in_b.size());
    row.iou = change_iou(pred, rec.mask);
    BinaryMask fpa = origin_footprint(rec.anchor.instance, rec.diff.only_in_a);
    BinaryMask fpb = origin_footprint(rec.aligned_instance, rec.diff.only_in_b);
    row.iou_anchor_origin = restricted_iou(pred, rec.mask, fpa);
    row.iou_sample_origin = restricted_iou(pred, rec.mask, fpb);
    report.rows.push_back(row);
  }

  report.aggregates = aggregate_rows(report.rows, strata);

  // evenly spaced qualitative panels
  if (panel_count > 0 && !records.empty()) {
    int k = std::min<int>(panel_count, static_cast<int>(records.size()));
    for (int i = 0; i < k; ++i) {
      size_t oi = static_cast<size_t>(i) * records.size() / static_cast<size_t>(k);
      const PairRecord& rec = records[order[oi]];
      const BinaryMask& pred = predictions[order[oi]];
      const int s = rec.anchor.width();
      PanelImage panel;
      panel.pair_id = rec.pair_id;
      panel.image = ImageRGB(4 * s, s);
      for (int y = 0; y < s; ++y)
        for (int x = 0; x < s; ++x) {
          std::copy_n(rec.anchor.rgb.px(x, y), 3, panel.image.px(x, y));
          std::copy_n(rec.sample.rgb.px(x, y), 3, panel.image.px(s + x, y));
          uint8_t gt = rec.mask.at(x, y) ? 255 : 0;
          uint8_t pr = pred.at(x, y) ? 255 : 0;
          uint8_t* g = panel.image.px(2 * s + x, y);
          g[0] = g[1] = g[2] = gt;
          uint8_t* p = panel.image.px(3 * s + x, y);
          p[0] = p[1] = p[2] = pr;
        }
      report.panels.push_back(std::move(panel));
    }
  }
  return report;
}

namespace {

std::string svg_boxplot(const std::vector<Aggregate>& aggs, const std::string& stratum,
                        const std::string& title) {
  std::vector<const Aggregate*> boxes;
  for (const auto& a : aggs)
    if (a.stratum == stratum && a.metric == std::string("iou")) boxes.push_back(&a);
  const int box_w = 60, gap = 30, margin = 50;
  const int plot_h = 260, width = margin * 2 + static_cast<int>(boxes.size()) * (box_w + gap);
  const int height = plot_h + 90;
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\">\n";
  svg << "<text x=\"" << margin << "\" y=\"20\" font-size=\"14\">" << title << "</text>\n";
  auto ycoord = [&](double iou) { return 35 + plot_h * (1.0 - iou); };
  // axis
  svg << "<line x1=\"" << margin - 10 << "\" y1=\"" << ycoord(0) << "\" x2=\"" << margin - 10
      << "\" y2=\"" << ycoord(1) << "\" stroke=\"black\"/>\n";
  for (double tick = 0; tick <= 1.0001; tick += 0.25)
    svg << "<text x=\"5\" y=\"" << ycoord(tick) + 4 << "\" font-size=\"10\">"
        << format_short(tick) << "</text>\n";
  int i = 0;
  for (const Aggregate* a : boxes) {
    int x0 = margin + i * (box_w + gap);
    int cx = x0 + box_w / 2;
    if (a->count > 0) {
      double iqr = a->q3 - a->q1;
      double wlo = std::max(0.0, a->q1 - 1.5 * iqr);
      double whi = std::min(1.0, a->q3 + 1.5 * iqr);
      svg << "<line x1=\"" << cx << "\" y1=\"" << ycoord(wlo) << "\" x2=\"" << cx << "\" y2=\""
          << ycoord(whi) << "\" stroke=\"black\"/>\n";
      svg << "<rect x=\"" << x0 << "\" y=\"" << ycoord(a->q3) << "\" width=\"" << box_w
          << "\" height=\"" << std::max(1.0, ycoord(a->q1) - ycoord(a->q3))
          << "\" fill=\"#7cb4dd\" stroke=\"black\"/>\n";
      svg << "<line x1=\"" << x0 << "\" y1=\"" << ycoord(a->median) << "\" x2=\"" << x0 + box_w
          << "\" y2=\"" << ycoord(a->median) << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    }
    svg << "<text x=\"" << x0 << "\" y=\"" << 35 + plot_h + 20 << "\" font-size=\"10\">" << a->key
        << " (n=" << a->count << ")</text>\n";
    ++i;
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

}  // namespace

void emit_report(const EvalReport& report, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  {
    std::ostringstream csv;
    csv << "pair_id,split,nqd,diff_count,only_in_a,only_in_b,iou,iou_anchor_origin,"
           "iou_sample_origin\n";
    for (const auto& r : report.rows)
      csv << r.pair_id << ',' << r.split << ',' << format_real(r.nqd) << ',' << r.diff_count << ','
          << r.only_in_a << ',' << r.only_in_b << ',' << format_real(r.iou) << ','
          << format_real(r.iou_anchor_origin) << ',' << format_real(r.iou_sample_origin) << '\n';
    write_text(out_dir / "rows.csv", csv.str());
  }
  {
    std::ostringstream csv;
    csv << "metric,stratum,key,count,mean,median,q1,q3\n";
    for (const auto& a : report.aggregates) {
      csv << a.metric << ',' << a.stratum << ',' << '"' << a.key << '"' << ',' << a.count << ',';
      if (a.count > 0)
        csv << format_real(a.mean) << ',' << format_real(a.median) << ',' << format_real(a.q1)
            << ',' << format_real(a.q3);
      else
        csv << ",,,";
      csv << '\n';
    }
    write_text(out_dir / "aggregates.csv", csv.str());
  }
  write_text(out_dir / "boxplot_iou_nqd.svg",
             svg_boxplot(report.aggregates, "nqd_bin", "change IoU by orientation difference"));
  write_text(out_dir / "boxplot_iou_diff.svg",
             svg_boxplot(report.aggregates, "diff_bin", "change IoU by part-difference count"));
  if (!report.panels.empty()) {
    std::filesystem::create_directories(out_dir / "panels");
    for (const auto& p : report.panels) {
      char name[40];
      std::snprintf(name, sizeof(name), "panel_%08lld.png", static_cast<long long>(p.pair_id));
      write_file((out_dir / "panels" / name).string(), encode_png_rgb8(p.image));
    }
  }
}

std::vector<PairRow> parse_rows_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError("rows csv is empty");
  std::vector<PairRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string field;
    PairRow r;
    auto next = [&]() {
      if (!std::getline(ss, field, ',')) throw ParseError("rows csv: short line");
      return field;
    };
    r.pair_id = std::stoll(next());
    r.split = next();
    r.nqd = std::stod(next());
    r.diff_count = std::stoi(next());
    r.only_in_a = std::stoi(next());
    r.only_in_b = std::stoi(next());
    r.iou = std::stod(next());
    r.iou_anchor_origin = std::stod(next());
    r.iou_sample_origin = std::stod(next());
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace sdn
