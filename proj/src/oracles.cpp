// SPDX-License-Identifier: Apache-2.0
#include "sdn/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "sdn/attention.hpp"
#include "sdn/dataset.hpp"
#include "sdn/eval.hpp"
#include "sdn/graph.hpp"

namespace sdn::oracle {

using nn::TensorD;

double nqd_reference(const Quaternion& q1, const Quaternion& q2) {
  double c = std::clamp(std::abs(q1.dot(q2)), 0.0, 1.0);
  double theta = 2.0 * std::acos(c);  // relative rotation angle in [0, pi]
  return 2.0 * std::sin(theta / 4.0);
}

TensorD gca_reference(const TensorD& f1, const TensorD& f2) {
  const int c = f1.dim(0), h = f1.dim(1), w = f1.dim(2);
  TensorD out({2 * c, h, w});
  const double scale = 1.0 / std::sqrt(static_cast<double>(c));
  for (int qy = 0; qy < h; ++qy)
    for (int qx = 0; qx < w; ++qx) {
      for (int cc = 0; cc < c; ++cc) out.at(cc, qy, qx) = f1.at(cc, qy, qx);
      std::vector<double> logits;
      logits.reserve(static_cast<size_t>(h) * w);
      for (int ky = 0; ky < h; ++ky)
        for (int kx = 0; kx < w; ++kx) {
          double dot = 0;
          for (int cc = 0; cc < c; ++cc) dot += f1.at(cc, qy, qx) * f2.at(cc, ky, kx);
          logits.push_back(dot * scale);
        }
      double mx = *std::max_element(logits.begin(), logits.end());
      double denom = 0;
      for (double& l : logits) {
        l = std::exp(l - mx);
        denom += l;
      }
      size_t j = 0;
      for (int ky = 0; ky < h; ++ky)
        for (int kx = 0; kx < w; ++kx, ++j)
          for (int cc = 0; cc < c; ++cc)
            out.at(c + cc, qy, qx) += (logits[j] / denom) * f2.at(cc, ky, kx);
    }
  return out;
}

TensorD lca_reference(const TensorD& f1, const TensorD& f2, int window) {
  const int c = f1.dim(0), h = f1.dim(1), w = f1.dim(2);
  const int r = window / 2;
  TensorD out({2 * c, h, w});
  const double scale = 1.0 / std::sqrt(static_cast<double>(c));
  for (int qy = 0; qy < h; ++qy)
    for (int qx = 0; qx < w; ++qx) {
      for (int cc = 0; cc < c; ++cc) out.at(cc, qy, qx) = f1.at(cc, qy, qx);
      std::vector<std::pair<int, int>> nbrs;
      for (int ky = std::max(0, qy - r); ky <= std::min(h - 1, qy + r); ++ky)
        for (int kx = std::max(0, qx - r); kx <= std::min(w - 1, qx + r); ++kx)
          nbrs.emplace_back(ky, kx);
      std::vector<double> logits;
      logits.reserve(nbrs.size());
      for (auto [ky, kx] : nbrs) {
        double dot = 0;
        for (int cc = 0; cc < c; ++cc) dot += f1.at(cc, qy, qx) * f2.at(cc, ky, kx);
        logits.push_back(dot * scale);
      }
      double mx = *std::max_element(logits.begin(), logits.end());
      double denom = 0;
      for (double& l : logits) {
        l = std::exp(l - mx);
        denom += l;
      }
      for (size_t j = 0; j < nbrs.size(); ++j)
        for (int cc = 0; cc < c; ++cc)
          out.at(c + cc, qy, qx) += (logits[j] / denom) * f2.at(cc, nbrs[j].first, nbrs[j].second);
    }
  return out;
}

namespace {
inline double phi(double u) { return u >= 0 ? u + 1.0 : std::exp(u); }
}

TensorD linear_attention_quadratic_reference(const TensorD& q, const TensorD& k, const TensorD& v,
                                             int heads) {
  const int c = q.dim(0), h = q.dim(1), w = q.dim(2), m = h * w, d = c / heads;
  TensorD out({c, h, w});
  for (int hh = 0; hh < heads; ++hh) {
    for (int i = 0; i < m; ++i) {
      double den = 0;
      std::vector<double> wij(static_cast<size_t>(m));
      for (int j = 0; j < m; ++j) {
        double dot = 0;
        for (int b = 0; b < d; ++b) {
          int ch = hh * d + b;
          dot += phi(q[static_cast<int64_t>(ch) * m + i]) * phi(k[static_cast<int64_t>(ch) * m + j]);
        }
        wij[static_cast<size_t>(j)] = dot;
        den += dot;
      }
      den = std::max(den, 1e-30);
      for (int b = 0; b < d; ++b) {
        int ch = hh * d + b;
        double acc = 0;
        for (int j = 0; j < m; ++j)
          acc += wij[static_cast<size_t>(j)] * v[static_cast<int64_t>(ch) * m + j];
        out[static_cast<int64_t>(ch) * m + i] = acc / den;
      }
    }
  }
  return out;
}

TensorD softmax_attention_reference(const TensorD& q, const TensorD& k, const TensorD& v,
                                    int heads) {
  const int c = q.dim(0), h = q.dim(1), w = q.dim(2), m = h * w, d = c / heads;
  TensorD out({c, h, w});
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (int hh = 0; hh < heads; ++hh) {
    for (int i = 0; i < m; ++i) {
      std::vector<double> logits(static_cast<size_t>(m));
      for (int j = 0; j < m; ++j) {
        double dot = 0;
        for (int b = 0; b < d; ++b) {
          int ch = hh * d + b;
          dot += q[static_cast<int64_t>(ch) * m + i] * k[static_cast<int64_t>(ch) * m + j];
        }
        logits[static_cast<size_t>(j)] = dot * scale;
      }
      double mx = *std::max_element(logits.begin(), logits.end());
      double den = 0;
      for (double& l : logits) {
        l = std::exp(l - mx);
        den += l;
      }
      for (int b = 0; b < d; ++b) {
        int ch = hh * d + b;
        double acc = 0;
        for (int j = 0; j < m; ++j) acc += logits[static_cast<size_t>(j)] * v[static_cast<int64_t>(ch) * m + j];
        out[static_cast<int64_t>(ch) * m + i] = acc / den;
      }
    }
  }
  return out;
}

PartDiff part_diff_reference(const PartCatalog& cat, const AssemblyState& a,
                             const AssemblyState& b) {
  std::vector<int> ia = a.part_ids(cat.part_count());
  std::vector<int> ib = b.part_ids(cat.part_count());
  std::vector<int> sym;
  std::set_symmetric_difference(ia.begin(), ia.end(), ib.begin(), ib.end(),
                                std::back_inserter(sym));
  PartDiff d;
  for (int id : sym)
    (a.contains(id) ? d.only_in_a : d.only_in_b).push_back(id);
  return d;
}

BinaryMask diff_membership_mask_reference(const ImageU16& anchor_labels,
                                          const ImageU16& aligned_labels, const PartDiff& diff) {
  std::set<int> diff_set(diff.only_in_a.begin(), diff.only_in_a.end());
  diff_set.insert(diff.only_in_b.begin(), diff.only_in_b.end());
  BinaryMask m(anchor_labels.width, anchor_labels.height);
  for (size_t i = 0; i < m.values.size(); ++i) {
    int la = anchor_labels.pixels[i], lb = aligned_labels.pixels[i];
    bool change = (la != 0 && diff_set.count(la)) || (lb != 0 && diff_set.count(lb));
    m.values[i] = change ? 1 : 0;
  }
  return m;
}

std::array<double, 4> projected_box_bbox_reference(const Box& box, const RigidTransform& tf,
                                                   const CameraPose& pose) {
  double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
  for (int i = 0; i < 8; ++i) {
    Vec3 local{box.center.x + ((i & 1) ? 0.5 : -0.5) * box.size.x,
               box.center.y + ((i & 2) ? 0.5 : -0.5) * box.size.y,
               box.center.z + ((i & 4) ? 0.5 : -0.5) * box.size.z};
    auto uvz = pose.project(tf.apply(local));
    x0 = std::min(x0, uvz[0]);
    x1 = std::max(x1, uvz[0]);
    y0 = std::min(y0, uvz[1]);
    y1 = std::max(y1, uvz[1]);
  }
  return {x0, y0, x1, y1};
}

double iou_reference(const BinaryMask& pred, const BinaryMask& gt) {
  int64_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (size_t i = 0; i < pred.values.size(); ++i) {
    bool p = pred.values[i] != 0, g = gt.values[i] != 0;
    if (p && g) ++tp;
    else if (p) ++fp;
    else if (g) ++fn;
    else ++tn;
  }
  if (tp + fp + fn == 0) return 1.0;
  return static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
}

double quantile_reference(std::vector<double> values, double p) {
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  double pos = p * (static_cast<double>(n) - 1.0);
  size_t below = static_cast<size_t>(pos);
  if (below >= n - 1) return values[n - 1];
  double w = pos - static_cast<double>(below);
  return (1.0 - w) * values[below] + w * values[below + 1];
}

// ---- suites ----

namespace {

using Check = std::pair<bool, std::string>;

template <typename Fn>
OracleResult run_named(const std::string& name, Fn&& fn) {
  OracleResult r;
  r.name = name;
  try {
    Check c = fn();
    r.pass = c.first;
    r.detail = c.second;
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  return r;
}

double max_abs_diff(const TensorD& a, const TensorD& b) {
  double mx = 0;
  for (int64_t i = 0; i < a.size(); ++i) mx = std::max(mx, std::abs(a[i] - b[i]));
  return mx;
}

TensorD random_tensor(const std::vector<int>& shape, Rng& rng) {
  TensorD t(shape);
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-1.0, 1.0);
  return t;
}

Quaternion random_rotation(Rng& rng) {
  auto axis = rng.unit_vector3();
  double angle = rng.uniform(0.0, kPi);
  return Quaternion::from_axis_angle(Vec3{axis[0], axis[1], axis[2]}, angle);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<OracleResult> run_oracle_suites(uint64_t seed) {
  std::vector<OracleResult> results;
  Rng rng(seed);

  results.push_back(run_named("nqd_closed_form", [&]() -> Check {
    double worst = 0;
    // angle grid over [0, 360), folded to the minimal rotation angle
    for (int i = 0; i < 720; ++i) {
      double theta = i * (2.0 * kPi / 720.0);
      auto axis = rng.unit_vector3();
      Quaternion base = random_rotation(rng);
      Quaternion rot =
          Quaternion::from_axis_angle(Vec3{axis[0], axis[1], axis[2]}, theta) * base;
      double theta_min = std::min(theta, 2.0 * kPi - theta);
      double expect = 2.0 * std::sin(theta_min / 4.0);
      worst = std::max(worst, std::abs(nqd(base, rot.normalized()) - expect));
    }
    for (int i = 0; i < 1000; ++i) {
      Quaternion a = random_rotation(rng), b = random_rotation(rng);
      worst = std::max(worst, std::abs(nqd(a, b) - nqd_reference(a, b)));
    }
    return {worst < 1e-9, "max deviation " + fmt(worst)};
  }));

  results.push_back(run_named("pose_sampling_bounds", [&]() -> Check {
    PoseRange range;
    range.elev_min = 30;
    range.elev_max = 60;
    CameraIntrinsics intr;
    for (int i = 0; i < 10000; ++i) {
      CameraPose p = sample_pose(range, intr, rng);
      double elev = rad2deg(std::asin(p.position.y / p.position.norm()));
      if (elev < 30 - 1e-9 || elev > 60 + 1e-9)
        return {false, "elevation " + fmt(elev) + " outside [30,60]"};
      double d = p.position.norm();
      if (d < range.dist_min - 1e-9 || d > range.dist_max + 1e-9)
        return {false, "distance " + fmt(d) + " out of range"};
    }
    return {true, "10^4 draws within bounds"};
  }));

  results.push_back(run_named("perturb_pose_budget", [&]() -> Check {
    CameraIntrinsics intr;
    PoseRange range;
    CameraPose base = sample_pose(range, intr, rng);
    double max_seen = 0;
    for (int i = 0; i < 10000; ++i) {
      CameraPose p = perturb_pose(base, 0.1, rng);
      double v = nqd(base.orientation, p.orientation);
      if (v > 0.1) return {false, "budget exceeded: " + fmt(v)};
      max_seen = std::max(max_seen, v);
    }
    if (max_seen < 0.09) return {false, "coverage poor: max " + fmt(max_seen)};
    CameraPose frozen = perturb_pose(base, 0.0, rng);
    if (frozen.orientation.w != base.orientation.w || frozen.position.x != base.position.x)
      return {false, "zero budget must return the base pose exactly"};
    return {true, "10^4 draws, max nqd " + fmt(max_seen)};
  }));

  results.push_back(run_named("default_catalog_valid", [&]() -> Check {
    PartCatalog cat = default_catalog();
    if (cat.part_count() != 16) return {false, "expected 16 parts"};
    if (cat.part(cat.base_part).name != "chassis") return {false, "base must be chassis"};
    return {true, "16 parts, connected, base=chassis"};
  }));

  results.push_back(run_named("state_sampler_support", [&]() -> Check {
    PartCatalog cat = default_catalog();
    auto valid = enumerate_valid_states(cat);
    std::set<uint32_t> universe(valid.begin(), valid.end());
    std::set<uint32_t> seen;
    for (int i = 0; i < 10000; ++i) {
      AssemblyState s = sample_state(cat, rng);
      if (!universe.count(s.mask)) return {false, "sampled state outside the valid lattice"};
      if (!state_valid(cat, s)) return {false, "sampled state fails graph-search validation"};
      seen.insert(s.mask);
    }
    if (seen.size() < 100)
      return {false, "only " + std::to_string(seen.size()) + " distinct states in 10^4 draws"};
    return {true, std::to_string(seen.size()) + " distinct states of " +
                      std::to_string(universe.size()) + " valid"};
  }));

  results.push_back(run_named("part_diff_set_algebra", [&]() -> Check {
    PartCatalog cat = default_catalog();
    for (int i = 0; i < 500; ++i) {
      AssemblyState a = sample_state(cat, rng), b = sample_state(cat, rng);
      PartDiff got = part_diff(a, b);
      PartDiff want = part_diff_reference(cat, a, b);
      if (got.only_in_a != want.only_in_a || got.only_in_b != want.only_in_b)
        return {false, "mismatch with std::set_symmetric_difference"};
      PartDiff swapped = part_diff(b, a);
      if (swapped.only_in_a != got.only_in_b || swapped.only_in_b != got.only_in_a)
        return {false, "part_diff is not symmetric under swap"};
    }
    return {true, "500 random pairs match"};
  }));

  results.push_back(run_named("pinhole_projection", [&]() -> Check {
    PartCatalog cat = load_catalog(R"({"base_part":"cube","parts":[
      {"id":1,"name":"cube","color":[200,60,60],
       "boxes":[{"center":[0,0,0],"size":[1,1,1]}]}],"adjacency":[]})");
    RenderParams params;
    params.image_size = 128;
    params.background = BackgroundStyle::flat;
    CameraIntrinsics intr;
    AssemblyState s;
    s.add(1);
    auto footprint_bbox = [&](const RenderedView& view, int (&bbox)[4]) {
      bbox[0] = bbox[1] = 128;
      bbox[2] = bbox[3] = -1;
      for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x)
          if (view.instance.at(x, y) != 0) {
            bbox[0] = std::min(bbox[0], x);
            bbox[2] = std::max(bbox[2], x);
            bbox[1] = std::min(bbox[1], y);
            bbox[3] = std::max(bbox[3], y);
          }
    };
    // straight-on axis views: the silhouette is an axis-aligned rectangle, so
    // the footprint must match the corner projection within 1 px per side
    const Vec3 axis_positions[] = {{0, 4, 0}, {4, 0.001, 0}, {0, 0.001, 4},
                                   {-4, 0.001, 0}, {0, 3, 0}, {0, 6, 0}};
    for (const Vec3& pos : axis_positions) {
      CameraPose pose;
      pose.position = pos;
      pose.orientation = look_at_origin(pos, 0.0);
      pose.intrinsics = intr;
      RenderedView view = rasterize(cat, s, pose, params);
      int bbox[4];
      footprint_bbox(view, bbox);
      auto bb = projected_box_bbox_reference(cat.part(1).boxes[0], cat.part(1).transform, pose);
      if (std::abs(bbox[0] + 0.5 - bb[0]) > 1.0 || std::abs(bbox[2] + 0.5 - bb[2]) > 1.0 ||
          std::abs(bbox[1] + 0.5 - bb[1]) > 1.0 || std::abs(bbox[3] + 0.5 - bb[3]) > 1.0)
        return {false, "axis view footprint deviates more than 1 px from analytic projection"};
    }
    // arbitrary poses: covered pixel centers always lie inside the projected
    // corner bbox (convexity), and each side comes within 2 px of it
    PoseRange range;
    range.dist_min = range.dist_max = 4.0;
    for (int trial = 0; trial < 20; ++trial) {
      CameraPose pose = sample_pose(range, intr, rng);
      RenderedView view = rasterize(cat, s, pose, params);
      int bbox[4];
      footprint_bbox(view, bbox);
      auto bb = projected_box_bbox_reference(cat.part(1).boxes[0], cat.part(1).transform, pose);
      if (bbox[0] + 0.5 < bb[0] - 1e-9 || bbox[2] + 0.5 > bb[2] + 1e-9 ||
          bbox[1] + 0.5 < bb[1] - 1e-9 || bbox[3] + 0.5 > bb[3] + 1e-9)
        return {false, "footprint escapes the analytic corner bbox"};
      if (bbox[0] + 0.5 - bb[0] > 2.0 || bb[2] - (bbox[2] + 0.5) > 2.0 ||
          bbox[1] + 0.5 - bb[1] > 2.0 || bb[3] - (bbox[3] + 0.5) > 2.0)
        return {false, "footprint bbox loose by more than 2 px at an oblique pose"};
    }
    return {true, "6 axis views within 1 px, 20 oblique poses contained"};
  }));

  results.push_back(run_named("change_mask_dual_rule", [&]() -> Check {
    PartCatalog cat = default_catalog();
    GenConfig cfg = default_gen_config(cat, rng.next_u64());
    cfg.render.image_size = 64;
    cfg.intrinsics.focal_px = 1.1 * 64;
    cfg.intrinsics.cx = cfg.intrinsics.cy = 32;
    cfg.intrinsics.width = cfg.intrinsics.height = 64;
    PoseRange range;
    range.dist_min = 3 * cat.bounding_radius();
    range.dist_max = 5 * cat.bounding_radius();
    for (int i = 0; i < 100; ++i) {
      auto [sa, sb] = sample_state_pair(cat, 1, 6, {}, rng);
      CameraPose pose = sample_pose(range, cfg.intrinsics, rng);
      RenderParams rp = cfg.render;
      rp.background_seed = rng.next_u64();
      RenderedView anchor = rasterize(cat, sa, pose, rp);
      RenderedView aligned = rasterize(cat, sb, pose, rp);
      BinaryMask pixelwise = change_mask(anchor, aligned);
      BinaryMask membership =
          diff_membership_mask_reference(anchor.instance, aligned.instance, part_diff(sa, sb));
      if (pixelwise.values != membership.values)
        return {false, "pixelwise-inequality and diff-membership masks differ"};
      BinaryMask self = change_mask(anchor, anchor);
      if (self.count_ones() != 0) return {false, "change_mask(v, v) is not all-zero"};
    }
    return {true, "100 random pairs agree exactly"};
  }));

  results.push_back(run_named("gca_brute_force", [&]() -> Check {
    double worst = 0;
    for (int t = 0; t < 5; ++t) {
      TensorD f1 = random_tensor({6, 7, 5}, rng), f2 = random_tensor({6, 7, 5}, rng);
      nn::Graph<double> g(false);
      auto out = nn::global_cross_attention(g, nn::make_var(f1), nn::make_var(f2));
      worst = std::max(worst, max_abs_diff(out->value, gca_reference(f1, f2)));
    }
    return {worst < 1e-6, "max |diff| " + fmt(worst)};
  }));

  results.push_back(run_named("lca_window1_and_full", [&]() -> Check {
    TensorD f1 = random_tensor({4, 8, 8}, rng), f2 = random_tensor({4, 8, 8}, rng);
    nn::Graph<double> g(false);
    auto w1 = nn::local_cross_attention(g, nn::make_var(f1), nn::make_var(f2), 1);
    // window 1: attended half equals f2 pointwise
    double worst = 0;
    for (int c = 0; c < 4; ++c)
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
          worst = std::max(worst, std::abs(w1->value.at(4 + c, y, x) - f2.at(c, y, x)));
    if (worst > 1e-9) return {false, "window=1 does not return f2 (|diff| " + fmt(worst) + ")"};
    auto full = nn::local_cross_attention(g, nn::make_var(f1), nn::make_var(f2), 15);
    auto gca = nn::global_cross_attention(g, nn::make_var(f1), nn::make_var(f2));
    double d = max_abs_diff(full->value, gca->value);
    if (d > 1e-6) return {false, "full-coverage window differs from gca by " + fmt(d)};
    double dref = max_abs_diff(full->value, lca_reference(f1, f2, 15));
    if (dref > 1e-6) return {false, "full window differs from brute force by " + fmt(dref)};
    TensorD small_ref = lca_reference(f1, f2, 5);
    auto w5 = nn::local_cross_attention(g, nn::make_var(f1), nn::make_var(f2), 5);
    double d5 = max_abs_diff(w5->value, small_ref);
    return {d5 < 1e-6, "window 5 vs brute force |diff| " + fmt(d5)};
  }));

  results.push_back(run_named("gca_permutation_invariance", [&]() -> Check {
    TensorD f1 = random_tensor({5, 6, 6}, rng), f2 = random_tensor({5, 6, 6}, rng);
    const int m = 36;
    std::vector<int> perm(m);
    for (int i = 0; i < m; ++i) perm[static_cast<size_t>(i)] = i;
    for (int i = m; i > 1; --i)
      std::swap(perm[static_cast<size_t>(i - 1)],
                perm[static_cast<size_t>(rng.uniform_int(0, i - 1))]);
    TensorD f2p({5, 6, 6});
    for (int c = 0; c < 5; ++c)
      for (int j = 0; j < m; ++j)
        f2p[static_cast<int64_t>(c) * m + perm[static_cast<size_t>(j)]] =
            f2[static_cast<int64_t>(c) * m + j];
    nn::Graph<double> g(false);
    auto a = nn::global_cross_attention(g, nn::make_var(f1), nn::make_var(f2));
    auto b = nn::global_cross_attention(g, nn::make_var(f1), nn::make_var(f2p));
    // compare attended halves only (first half is f1 in both)
    double worst = 0;
    for (int c = 5; c < 10; ++c)
      for (int j = 0; j < m; ++j)
        worst = std::max(worst, std::abs(a->value[static_cast<int64_t>(c) * m + j] -
                                         b->value[static_cast<int64_t>(c) * m + j]));
    return {worst < 1e-6, "max |diff| under key/value permutation " + fmt(worst)};
  }));

  results.push_back(run_named("linear_attention_quadratic_expansion", [&]() -> Check {
    TensorD q = random_tensor({8, 6, 6}, rng), k = random_tensor({8, 6, 6}, rng),
            v = random_tensor({8, 6, 6}, rng);
    nn::Graph<double> g(false);
    auto pq = nn::elu_plus_one(g, nn::make_var(q));
    auto pk = nn::elu_plus_one(g, nn::make_var(k));
    auto fast = nn::linear_attention_core(g, pq, pk, nn::make_var(v), 2);
    TensorD ref = linear_attention_quadratic_reference(q, k, v, 2);
    double d = max_abs_diff(fast->value, ref);
    if (d > 1e-6) return {false, "linear attention differs from quadratic expansion by " + fmt(d)};
    TensorD sm = softmax_attention_reference(q, k, v, 2);
    double dist = max_abs_diff(fast->value, sm);
    if (dist < 1e-3)
      return {false, "kernelized attention unexpectedly matches softmax attention"};
    return {true, "matches expansion (" + fmt(d) + "), differs from softmax (" + fmt(dist) + ")"};
  }));

  results.push_back(run_named("iou_and_quantiles", [&]() -> Check {
    for (int t = 0; t < 200; ++t) {
      BinaryMask a(16, 16), b(16, 16);
      for (size_t i = 0; i < a.values.size(); ++i) {
        a.values[i] = rng.uniform() < 0.3 ? 1 : 0;
        b.values[i] = rng.uniform() < 0.3 ? 1 : 0;
      }
      if (std::abs(change_iou(a, b) - iou_reference(a, b)) > 1e-12)
        return {false, "IoU mismatch with confusion-tally oracle"};
    }
    for (int t = 0; t < 100; ++t) {
      std::vector<double> xs;
      int n = static_cast<int>(rng.uniform_int(1, 40));
      for (int i = 0; i < n; ++i) xs.push_back(rng.uniform());
      std::vector<double> sorted = xs;
      std::sort(sorted.begin(), sorted.end());
      for (double p : {0.25, 0.5, 0.75}) {
        double a = quantile_sorted(sorted, p);
        double b = quantile_reference(xs, p);
        if (std::abs(a - b) > 1e-12) return {false, "quantile implementations disagree"};
      }
    }
    return {true, "IoU and quantile cross-checks agree"};
  }));

  return results;
}

}  // namespace sdn::oracle
