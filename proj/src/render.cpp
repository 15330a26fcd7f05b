// SPDX-License-Identifier: Apache-2.0
#include "sdn/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sdn {

namespace {

struct Tri {
  Vec3 v[3];       // world space
  Vec3 normal;     // outward unit normal
  int part_id = 0;
};

// Emits the 12 triangles of a box with outward winding.
void emit_box(const Box& box, const RigidTransform& tf, int part_id, std::vector<Tri>& out) {
  Vec3 h = box.size * 0.5;
  Vec3 corners[8];
  for (int i = 0; i < 8; ++i) {
    Vec3 local{box.center.x + ((i & 1) ? h.x : -h.x), box.center.y + ((i & 2) ? h.y : -h.y),
               box.center.z + ((i & 4) ? h.z : -h.z)};
    corners[i] = tf.apply(local);
  }
  Vec3 box_center_w = tf.apply(box.center);
  static const int faces[6][4] = {{1, 3, 7, 5}, {0, 4, 6, 2}, {2, 3, 7, 6},
                                  {0, 1, 5, 4}, {4, 5, 7, 6}, {0, 2, 3, 1}};
  for (const auto& f : faces) {
    Vec3 a = corners[f[0]], b = corners[f[1]], c = corners[f[2]], d = corners[f[3]];
    Vec3 n = (b - a).cross(c - a);
    Vec3 face_center = (a + b + c + d) * 0.25;
    if (n.dot(face_center - box_center_w) < 0) {
      std::swap(b, d);
      n = (b - a).cross(c - a);
    }
    n = n.normalized();
    out.push_back(Tri{{a, b, c}, n, part_id});
    out.push_back(Tri{{a, c, d}, n, part_id});
  }
}

bool point_in_box(const Box& box, const RigidTransform& tf, const Vec3& p_world) {
  // inverse rigid transform
  Quaternion inv{tf.rotation.w, -tf.rotation.x, -tf.rotation.y, -tf.rotation.z};
  Vec3 local = inv.rotate(p_world - tf.translation);
  Vec3 h = box.size * 0.5;
  return std::abs(local.x - box.center.x) <= h.x && std::abs(local.y - box.center.y) <= h.y &&
         std::abs(local.z - box.center.z) <= h.z;
}

double value_noise(double x, double y, uint64_t seed) {
  auto lattice = [seed](int ix, int iy) {
    uint64_t h = Rng::mix(seed ^ (static_cast<uint64_t>(static_cast<uint32_t>(ix)) << 32 |
                                  static_cast<uint32_t>(iy)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
  };
  int ix = static_cast<int>(std::floor(x));
  int iy = static_cast<int>(std::floor(y));
  double fx = x - ix, fy = y - iy;
  double sx = fx * fx * (3 - 2 * fx);
  double sy = fy * fy * (3 - 2 * fy);
  double v00 = lattice(ix, iy), v10 = lattice(ix + 1, iy);
  double v01 = lattice(ix, iy + 1), v11 = lattice(ix + 1, iy + 1);
  double a = v00 + (v10 - v00) * sx;
  double b = v01 + (v11 - v01) * sx;
  return a + (b - a) * sy;
}

void fill_background(ImageRGB& rgb, const RenderParams& params) {
  int s = params.image_size;
  if (params.background == BackgroundStyle::flat) {
    std::fill(rgb.pixels.begin(), rgb.pixels.end(), static_cast<uint8_t>(89));
    return;
  }
  for (int y = 0; y < s; ++y) {
    for (int x = 0; x < s; ++x) {
      double fx = static_cast<double>(x) / s;
      double fy = static_cast<double>(y) / s;
      double v = 0.7 * value_noise(fx * 8, fy * 8, params.background_seed) +
                 0.3 * value_noise(fx * 16, fy * 16, params.background_seed ^ 0x5bd1e995u);
      double g = 0.15 + 0.40 * v;
      uint8_t b = static_cast<uint8_t>(std::lround(g * 255.0));
      uint8_t* p = rgb.px(x, y);
      p[0] = p[1] = p[2] = b;
    }
  }
}

}  // namespace

RenderedView rasterize(const PartCatalog& cat, const AssemblyState& state, const CameraPose& pose,
                       const RenderParams& params) {
  params.validate();
  pose.validate();
  if (!state_valid(cat, state)) throw InvalidArgument("state violates assembly invariants");
  const int s = params.image_size;
  CameraPose cam = pose;
  cam.intrinsics.width = cam.intrinsics.height = s;

  std::vector<Tri> tris;
  for (int id = 1; id <= cat.part_count(); ++id) {
    if (!state.contains(id)) continue;
    const PartDef& part = cat.part(id);
    for (const auto& box : part.boxes) {
      if (point_in_box(box, part.transform, cam.position))
        throw RenderError("camera is inside part '" + part.name + "'");
      emit_box(box, part.transform, id, tris);
    }
  }

  RenderedView view;
  view.rgb = ImageRGB(s, s);
  view.instance = ImageU16(s, s);
  view.depth.assign(static_cast<size_t>(s) * s, std::numeric_limits<float>::infinity());
  view.pose = cam;
  view.state = state;
  fill_background(view.rgb, params);

  std::vector<double> zbuf(static_cast<size_t>(s) * s, std::numeric_limits<double>::infinity());
  const double near_z = 0.05;
  Vec3 light = params.light_dir.normalized();

  for (const auto& tri : tris) {
    double u[3], v[3], invz[3];
    for (int i = 0; i < 3; ++i) {
      Vec3 c = cam.world_to_camera(tri.v[i]);
      if (c.z <= near_z)
        throw RenderError("geometry reaches the camera near plane; camera too close");
      u[i] = cam.intrinsics.cx + cam.intrinsics.focal_px * c.x / c.z;
      v[i] = cam.intrinsics.cy + cam.intrinsics.focal_px * c.y / c.z;
      invz[i] = 1.0 / c.z;
    }
    double area2 = (u[1] - u[0]) * (v[2] - v[0]) - (v[1] - v[0]) * (u[2] - u[0]);
    if (area2 == 0) continue;
    if (area2 < 0) {
      std::swap(u[1], u[2]);
      std::swap(v[1], v[2]);
      std::swap(invz[1], invz[2]);
      area2 = -area2;
    }
    int x0 = std::max(0, static_cast<int>(std::floor(std::min({u[0], u[1], u[2]}) - 0.5)));
    int x1 = std::min(s - 1, static_cast<int>(std::ceil(std::max({u[0], u[1], u[2]}))));
    int y0 = std::max(0, static_cast<int>(std::floor(std::min({v[0], v[1], v[2]}) - 0.5)));
    int y1 = std::min(s - 1, static_cast<int>(std::ceil(std::max({v[0], v[1], v[2]}))));
    if (x0 > x1 || y0 > y1) continue;

    double shade = std::clamp(params.ambient + std::max(0.0, tri.normal.dot(light)), 0.0, 1.0);
    const PartDef& part = cat.part(tri.part_id);
    uint8_t r8 = static_cast<uint8_t>(std::lround(part.color[0] * shade));
    uint8_t g8 = static_cast<uint8_t>(std::lround(part.color[1] * shade));
    uint8_t b8 = static_cast<uint8_t>(std::lround(part.color[2] * shade));

    for (int py = y0; py <= y1; ++py) {
      double pcy = py + 0.5;
      for (int px = x0; px <= x1; ++px) {
        double pcx = px + 0.5;
        double e0 = (u[2] - u[1]) * (pcy - v[1]) - (v[2] - v[1]) * (pcx - u[1]);
        double e1 = (u[0] - u[2]) * (pcy - v[2]) - (v[0] - v[2]) * (pcx - u[2]);
        double e2 = (u[1] - u[0]) * (pcy - v[0]) - (v[1] - v[0]) * (pcx - u[0]);
        if (e0 < 0 || e1 < 0 || e2 < 0) continue;
        double iz = (e0 * invz[0] + e1 * invz[1] + e2 * invz[2]) / area2;
        if (iz <= 0) continue;
        double z = 1.0 / iz;
        size_t idx = static_cast<size_t>(py) * s + px;
        uint16_t cur = view.instance.pixels[idx];
        if (z < zbuf[idx] || (z == zbuf[idx] && (cur == 0 || tri.part_id < cur))) {
          zbuf[idx] = z;
          view.depth[idx] = static_cast<float>(z);
          view.instance.pixels[idx] = static_cast<uint16_t>(tri.part_id);
          uint8_t* p = view.rgb.px(px, py);
          p[0] = r8;
          p[1] = g8;
          p[2] = b8;
        }
      }
    }
  }
  return view;
}

static void require_same_pose(const RenderedView& a, const RenderedView& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw InvalidArgument("change_mask: image sizes differ");
  const auto& pa = a.pose;
  const auto& pb = b.pose;
  if (pa.position.x != pb.position.x || pa.position.y != pb.position.y ||
      pa.position.z != pb.position.z)
    throw InvalidArgument("change_mask: camera positions differ");
  if (nqd(pa.orientation, pb.orientation) > 1e-12)
    throw InvalidArgument("change_mask: camera orientations differ");
  if (pa.intrinsics.focal_px != pb.intrinsics.focal_px || pa.intrinsics.cx != pb.intrinsics.cx ||
      pa.intrinsics.cy != pb.intrinsics.cy)
    throw InvalidArgument("change_mask: camera intrinsics differ");
}

BinaryMask change_mask(const RenderedView& anchor, const RenderedView& sample_at_anchor_pose) {
  require_same_pose(anchor, sample_at_anchor_pose);
  BinaryMask m(anchor.width(), anchor.height());
  for (size_t i = 0; i < m.values.size(); ++i)
    m.values[i] = anchor.instance.pixels[i] != sample_at_anchor_pose.instance.pixels[i] ? 1 : 0;
  return m;
}

BinaryMask change_mask_by_diff_membership(const RenderedView& anchor,
                                          const RenderedView& sample_at_anchor_pose) {
  require_same_pose(anchor, sample_at_anchor_pose);
  PartDiff diff = part_diff(anchor.state, sample_at_anchor_pose.state);
  uint32_t diff_mask = 0;
  for (int id : diff.only_in_a) diff_mask |= 1u << (id - 1);
  for (int id : diff.only_in_b) diff_mask |= 1u << (id - 1);
  auto in_diff = [diff_mask](uint16_t id) {
    return id != 0 && (diff_mask & (1u << (id - 1))) != 0;
  };
  BinaryMask m(anchor.width(), anchor.height());
  for (size_t i = 0; i < m.values.size(); ++i)
    m.values[i] = (in_diff(anchor.instance.pixels[i]) ||
                   in_diff(sample_at_anchor_pose.instance.pixels[i]))
                      ? 1
                      : 0;
  return m;
}

CropWindow compute_crop_window(const ImageU16& instance, const CropSpec& spec, Rng& rng) {
  if (spec.margin_frac < 0) throw InvalidArgument("margin_frac must be >= 0");
  int w = instance.width, h = instance.height;
  int bx0 = w, by0 = h, bx1 = -1, by1 = -1;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (instance.at(x, y) != 0) {
        bx0 = std::min(bx0, x);
        bx1 = std::max(bx1, x);
        by0 = std::min(by0, y);
        by1 = std::max(by1, y);
      }
  if (bx1 < 0) throw RenderError("roi crop: view contains no object pixels");
  int bw = bx1 - bx0 + 1, bh = by1 - by0 + 1;
  int tight = std::max(bw, bh);
  int pad = static_cast<int>(std::lround(spec.margin_frac * tight));
  int side = std::min(std::min(w, h), tight + 2 * pad);
  side = std::max(side, std::min(std::min(w, h), tight));

  auto place = [&](int b0, int b1, int limit) {
    int lo = std::max(0, b1 + 1 - side);
    int hi = std::min(b0, limit - side);
    if (hi < lo) hi = lo;  // bbox wider than the clamped window; anchor at lo
    if (spec.random_translation) return static_cast<int>(rng.uniform_int(lo, hi));
    return std::clamp((b0 + b1 + 1 - side) / 2, lo, hi);
  };
  CropWindow win;
  win.side = side;
  win.x0 = place(bx0, bx1, w);
  win.y0 = place(by0, by1, h);
  return win;
}

ImageRGB crop_rgb_bilinear(const ImageRGB& src, const CropWindow& win, int out_size) {
  ImageRGB out(out_size, out_size);
  double scale = static_cast<double>(win.side) / out_size;
  for (int y = 0; y < out_size; ++y) {
    double sy = win.y0 + (y + 0.5) * scale - 0.5;
    for (int x = 0; x < out_size; ++x) {
      double sx = win.x0 + (x + 0.5) * scale - 0.5;
      int x0 = static_cast<int>(std::floor(sx));
      int y0 = static_cast<int>(std::floor(sy));
      double fx = sx - x0, fy = sy - y0;
      auto cl = [&](int v, int lo, int hi) { return std::clamp(v, lo, hi); };
      int xa = cl(x0, win.x0, win.x0 + win.side - 1), xb = cl(x0 + 1, win.x0, win.x0 + win.side - 1);
      int ya = cl(y0, win.y0, win.y0 + win.side - 1), yb = cl(y0 + 1, win.y0, win.y0 + win.side - 1);
      for (int c = 0; c < 3; ++c) {
        double v00 = src.px(xa, ya)[c], v10 = src.px(xb, ya)[c];
        double v01 = src.px(xa, yb)[c], v11 = src.px(xb, yb)[c];
        double v = (v00 * (1 - fx) + v10 * fx) * (1 - fy) + (v01 * (1 - fx) + v11 * fx) * fy;
        out.px(x, y)[c] = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

namespace {
inline int nearest_src(int i, int out_size, const int origin, int side) {
  int v = origin + static_cast<int>(std::floor((i + 0.5) * static_cast<double>(side) / out_size));
  return std::clamp(v, origin, origin + side - 1);
}
}  // namespace

ImageU16 crop_u16_nearest(const ImageU16& src, const CropWindow& win, int out_size) {
  ImageU16 out(out_size, out_size);
  for (int y = 0; y < out_size; ++y) {
    int sy = nearest_src(y, out_size, win.y0, win.side);
    for (int x = 0; x < out_size; ++x)
      out.at(x, y) = src.at(nearest_src(x, out_size, win.x0, win.side), sy);
  }
  return out;
}

BinaryMask crop_mask_nearest(const BinaryMask& src, const CropWindow& win, int out_size) {
  BinaryMask out(out_size, out_size);
  for (int y = 0; y < out_size; ++y) {
    int sy = nearest_src(y, out_size, win.y0, win.side);
    for (int x = 0; x < out_size; ++x)
      out.at(x, y) = src.at(nearest_src(x, out_size, win.x0, win.side), sy);
  }
  return out;
}

std::vector<float> crop_depth_nearest(const std::vector<float>& src, int src_size,
                                      const CropWindow& win, int out_size) {
  if (src.empty()) return {};
  std::vector<float> out(static_cast<size_t>(out_size) * out_size);
  for (int y = 0; y < out_size; ++y) {
    int sy = nearest_src(y, out_size, win.y0, win.side);
    for (int x = 0; x < out_size; ++x) {
      int sx = nearest_src(x, out_size, win.x0, win.side);
      out[static_cast<size_t>(y) * out_size + x] = src[static_cast<size_t>(sy) * src_size + sx];
    }
  }
  return out;
}

// ---- augmentation helpers ----

void apply_rot90(ImageRGB& img, int k) {
  if (img.width != img.height) throw InvalidArgument("rot90 requires a square image");
  k &= 3;
  int s = img.width;
  for (int step = 0; step < k; ++step) {
    ImageRGB dst(s, s);
    for (int y = 0; y < s; ++y)
      for (int x = 0; x < s; ++x)
        std::copy_n(img.px(y, s - 1 - x), 3, dst.px(x, y));  // clockwise quarter turn
    img = std::move(dst);
  }
}

void apply_rot90(ImageU16& img, int k) {
  if (img.width != img.height) throw InvalidArgument("rot90 requires a square image");
  k &= 3;
  int s = img.width;
  for (int step = 0; step < k; ++step) {
    ImageU16 dst(s, s);
    for (int y = 0; y < s; ++y)
      for (int x = 0; x < s; ++x) dst.at(x, y) = img.at(y, s - 1 - x);
    img = std::move(dst);
  }
}

void apply_rot90(BinaryMask& m, int k) {
  if (m.width != m.height) throw InvalidArgument("rot90 requires a square image");
  k &= 3;
  int s = m.width;
  for (int step = 0; step < k; ++step) {
    BinaryMask dst(s, s);
    for (int y = 0; y < s; ++y)
      for (int x = 0; x < s; ++x) dst.at(x, y) = m.at(y, s - 1 - x);
    m = std::move(dst);
  }
}

void apply_flip(ImageRGB& img, bool horizontal, bool vertical) {
  int w = img.width, h = img.height;
  if (horizontal)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w / 2; ++x)
        for (int c = 0; c < 3; ++c) std::swap(img.px(x, y)[c], img.px(w - 1 - x, y)[c]);
  if (vertical)
    for (int y = 0; y < h / 2; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) std::swap(img.px(x, y)[c], img.px(x, h - 1 - y)[c]);
}

void apply_flip(ImageU16& img, bool horizontal, bool vertical) {
  int w = img.width, h = img.height;
  if (horizontal)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w / 2; ++x) std::swap(img.at(x, y), img.at(w - 1 - x, y));
  if (vertical)
    for (int y = 0; y < h / 2; ++y)
      for (int x = 0; x < w; ++x) std::swap(img.at(x, y), img.at(x, h - 1 - y));
}

void apply_flip(BinaryMask& m, bool horizontal, bool vertical) {
  int w = m.width, h = m.height;
  if (horizontal)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w / 2; ++x) std::swap(m.at(x, y), m.at(w - 1 - x, y));
  if (vertical)
    for (int y = 0; y < h / 2; ++y)
      for (int x = 0; x < w; ++x) std::swap(m.at(x, y), m.at(x, h - 1 - y));
}

namespace {
struct SrcCoord {
  double x, y;
};
inline SrcCoord rotated_source(int x, int y, int w, int h, double angle_rad) {
  double cx = w * 0.5, cy = h * 0.5;
  double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
  double ca = std::cos(angle_rad), sa = std::sin(angle_rad);
  // inverse rotation
  return {cx + ca * dx + sa * dy - 0.5, cy - sa * dx + ca * dy - 0.5};
}
}  // namespace

void apply_rotation(ImageRGB& img, double angle_rad) {
  if (angle_rad == 0) return;
  int w = img.width, h = img.height;
  ImageRGB dst(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto s = rotated_source(x, y, w, h, angle_rad);
      int x0 = static_cast<int>(std::floor(s.x)), y0 = static_cast<int>(std::floor(s.y));
      double fx = s.x - x0, fy = s.y - y0;
      auto cx0 = std::clamp(x0, 0, w - 1), cx1 = std::clamp(x0 + 1, 0, w - 1);
      auto cy0 = std::clamp(y0, 0, h - 1), cy1 = std::clamp(y0 + 1, 0, h - 1);
      for (int c = 0; c < 3; ++c) {
        double v = (img.px(cx0, cy0)[c] * (1 - fx) + img.px(cx1, cy0)[c] * fx) * (1 - fy) +
                   (img.px(cx0, cy1)[c] * (1 - fx) + img.px(cx1, cy1)[c] * fx) * fy;
        dst.px(x, y)[c] = static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  img = std::move(dst);
}

void apply_rotation(ImageU16& img, double angle_rad) {
  if (angle_rad == 0) return;
  int w = img.width, h = img.height;
  ImageU16 dst(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto s = rotated_source(x, y, w, h, angle_rad);
      int sx = std::clamp(static_cast<int>(std::lround(s.x)), 0, w - 1);
      int sy = std::clamp(static_cast<int>(std::lround(s.y)), 0, h - 1);
      dst.at(x, y) = img.at(sx, sy);
    }
  img = std::move(dst);
}

void apply_rotation(BinaryMask& m, double angle_rad) {
  if (angle_rad == 0) return;
  int w = m.width, h = m.height;
  BinaryMask dst(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      auto s = rotated_source(x, y, w, h, angle_rad);
      int sx = std::clamp(static_cast<int>(std::lround(s.x)), 0, w - 1);
      int sy = std::clamp(static_cast<int>(std::lround(s.y)), 0, h - 1);
      dst.at(x, y) = m.at(sx, sy);
    }
  m = std::move(dst);
}

namespace {
void rgb_to_hsv(double r, double g, double b, double& h, double& s, double& v) {
  double mx = std::max({r, g, b}), mn = std::min({r, g, b});
  v = mx;
  double d = mx - mn;
  s = mx == 0 ? 0 : d / mx;
  if (d == 0) {
    h = 0;
    return;
  }
  if (mx == r)
    h = 60.0 * std::fmod((g - b) / d, 6.0);
  else if (mx == g)
    h = 60.0 * ((b - r) / d + 2.0);
  else
    h = 60.0 * ((r - g) / d + 4.0);
  if (h < 0) h += 360.0;
}

void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  double c = v * s;
  double hp = h / 60.0;
  double x = c * (1 - std::abs(std::fmod(hp, 2.0) - 1));
  double r1 = 0, g1 = 0, b1 = 0;
  if (hp < 1) { r1 = c; g1 = x; }
  else if (hp < 2) { r1 = x; g1 = c; }
  else if (hp < 3) { g1 = c; b1 = x; }
  else if (hp < 4) { g1 = x; b1 = c; }
  else if (hp < 5) { r1 = x; b1 = c; }
  else { r1 = c; b1 = x; }
  double m = v - c;
  r = r1 + m;
  g = g1 + m;
  b = b1 + m;
}
}  // namespace

void apply_color_jitter(ImageRGB& img, double hue_deg, double brightness, double contrast) {
  if (hue_deg == 0 && brightness == 0 && contrast == 1.0) return;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      uint8_t* p = img.px(x, y);
      double r = p[0] / 255.0, g = p[1] / 255.0, b = p[2] / 255.0;
      if (hue_deg != 0) {
        double h, s, v;
        rgb_to_hsv(r, g, b, h, s, v);
        h = std::fmod(h + hue_deg + 360.0, 360.0);
        hsv_to_rgb(h, s, v, r, g, b);
      }
      r = (r - 0.5) * contrast + 0.5 + brightness;
      g = (g - 0.5) * contrast + 0.5 + brightness;
      b = (b - 0.5) * contrast + 0.5 + brightness;
      p[0] = static_cast<uint8_t>(std::lround(std::clamp(r, 0.0, 1.0) * 255.0));
      p[1] = static_cast<uint8_t>(std::lround(std::clamp(g, 0.0, 1.0) * 255.0));
      p[2] = static_cast<uint8_t>(std::lround(std::clamp(b, 0.0, 1.0) * 255.0));
    }
}

void apply_gaussian_blur(ImageRGB& img, double sigma) {
  if (sigma <= 0) return;
  int radius = static_cast<int>(std::ceil(3 * sigma));
  std::vector<double> kern(static_cast<size_t>(radius) + 1);
  double sum = 0;
  for (int i = 0; i <= radius; ++i) {
    kern[static_cast<size_t>(i)] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += (i == 0 ? 1.0 : 2.0) * kern[static_cast<size_t>(i)];
  }
  for (auto& k : kern) k /= sum;
  int w = img.width, h = img.height;
  std::vector<double> tmp(static_cast<size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = kern[0] * img.px(x, y)[c];
        for (int i = 1; i <= radius; ++i) {
          int xl = std::clamp(x - i, 0, w - 1), xr = std::clamp(x + i, 0, w - 1);
          acc += kern[static_cast<size_t>(i)] * (img.px(xl, y)[c] + img.px(xr, y)[c]);
        }
        tmp[(static_cast<size_t>(y) * w + x) * 3 + c] = acc;
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = kern[0] * tmp[(static_cast<size_t>(y) * w + x) * 3 + c];
        for (int i = 1; i <= radius; ++i) {
          int yu = std::clamp(y - i, 0, h - 1), yd = std::clamp(y + i, 0, h - 1);
          acc += kern[static_cast<size_t>(i)] * (tmp[(static_cast<size_t>(yu) * w + x) * 3 + c] +
                                                 tmp[(static_cast<size_t>(yd) * w + x) * 3 + c]);
        }
        img.px(x, y)[c] = static_cast<uint8_t>(std::lround(std::clamp(acc, 0.0, 255.0)));
      }
}

}  // namespace sdn
