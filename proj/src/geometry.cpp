// SPDX-License-Identifier: Apache-2.0
#include "sdn/geometry.hpp"

#include <algorithm>

namespace sdn {

Quaternion Quaternion::from_matrix(const Mat3& m) {
  double tr = m[0][0] + m[1][1] + m[2][2];
  Quaternion q;
  if (tr > 0) {
    double s = std::sqrt(tr + 1.0) * 2.0;
    q.w = 0.25 * s;
    q.x = (m[2][1] - m[1][2]) / s;
    q.y = (m[0][2] - m[2][0]) / s;
    q.z = (m[1][0] - m[0][1]) / s;
  } else if (m[0][0] > m[1][1] && m[0][0] > m[2][2]) {
    double s = std::sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]) * 2.0;
    q.w = (m[2][1] - m[1][2]) / s;
    q.x = 0.25 * s;
    q.y = (m[0][1] + m[1][0]) / s;
    q.z = (m[0][2] + m[2][0]) / s;
  } else if (m[1][1] > m[2][2]) {
    double s = std::sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]) * 2.0;
    q.w = (m[0][2] - m[2][0]) / s;
    q.x = (m[0][1] + m[1][0]) / s;
    q.y = 0.25 * s;
    q.z = (m[1][2] + m[2][1]) / s;
  } else {
    double s = std::sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]) * 2.0;
    q.w = (m[1][0] - m[0][1]) / s;
    q.x = (m[0][2] + m[2][0]) / s;
    q.y = (m[1][2] + m[2][1]) / s;
    q.z = 0.25 * s;
  }
  return q.normalized();
}

static void require_unit(const Quaternion& q, const char* name) {
  if (std::abs(q.norm() - 1.0) > 1e-6)
    throw InvalidArgument(std::string(name) + " is not a unit quaternion");
}

double nqd(const Quaternion& q1, const Quaternion& q2) {
  require_unit(q1, "q1");
  require_unit(q2, "q2");
  double dw = q1.w - q2.w, dx = q1.x - q2.x, dy = q1.y - q2.y, dz = q1.z - q2.z;
  double sw = q1.w + q2.w, sx = q1.x + q2.x, sy = q1.y + q2.y, sz = q1.z + q2.z;
  double dminus = std::sqrt(dw * dw + dx * dx + dy * dy + dz * dz);
  double dplus = std::sqrt(sw * sw + sx * sx + sy * sy + sz * sz);
  return std::min(dminus, dplus);
}

double rotation_angle_between(const Quaternion& q1, const Quaternion& q2) {
  double c = std::clamp(std::abs(q1.dot(q2)), 0.0, 1.0);
  return 2.0 * std::acos(c);
}

Quaternion look_at_origin(const Vec3& position, double roll_rad) {
  Vec3 forward = (-position).normalized();
  Vec3 world_up{0, 1, 0};
  Vec3 right = forward.cross(world_up);
  if (right.norm() < 1e-9) right = forward.cross(Vec3{0, 0, 1});  // looking straight up/down
  right = right.normalized();
  Vec3 down = forward.cross(right).normalized();
  // rows map world -> camera (x right, y down, z forward)
  Mat3 rot{{{right.x, right.y, right.z}, {down.x, down.y, down.z}, {forward.x, forward.y, forward.z}}};
  double cr = std::cos(roll_rad), sr = std::sin(roll_rad);
  Mat3 rolled;
  for (int c = 0; c < 3; ++c) {
    rolled[0][c] = cr * rot[0][c] - sr * rot[1][c];
    rolled[1][c] = sr * rot[0][c] + cr * rot[1][c];
    rolled[2][c] = rot[2][c];
  }
  return Quaternion::from_matrix(rolled).canonical();
}

CameraPose sample_pose(const PoseRange& range, const CameraIntrinsics& intr, Rng& rng) {
  range.validate();
  double elev = deg2rad(rng.uniform(range.elev_min, range.elev_max));
  double azim = deg2rad(rng.uniform(range.azim_min, range.azim_max));
  double dist = rng.uniform(range.dist_min, range.dist_max);
  double roll = deg2rad(rng.uniform(range.roll_min, range.roll_max));
  Vec3 pos{dist * std::cos(elev) * std::cos(azim), dist * std::sin(elev),
           dist * std::cos(elev) * std::sin(azim)};
  CameraPose pose;
  pose.position = pos;
  pose.orientation = look_at_origin(pos, roll);
  pose.intrinsics = intr;
  pose.validate();
  return pose;
}

CameraPose perturb_pose(const CameraPose& base, double max_nqd, Rng& rng, double pos_frac) {
  const double sqrt2 = std::sqrt(2.0);
  if (max_nqd < 0 || max_nqd > sqrt2 + 1e-12)
    throw InvalidArgument("max_nqd must lie in [0, sqrt(2)]");
  if (max_nqd == 0) return base;
  // shaved by an ulp-scale factor so 2 sin(angle/4) can never round above max_nqd
  double angle_max = 4.0 * std::asin(std::min(1.0, max_nqd / 2.0)) * (1.0 - 1e-12);
  auto axis = rng.unit_vector3();
  double angle = rng.uniform(0.0, angle_max);
  Quaternion delta = Quaternion::from_axis_angle(Vec3{axis[0], axis[1], axis[2]}, angle);
  CameraPose out = base;
  out.orientation = (delta * base.orientation).normalized();
  double radius = pos_frac * (max_nqd / sqrt2) * base.position.norm();
  auto dir = rng.unit_vector3();
  double r = radius * std::cbrt(rng.uniform());  // uniform in ball
  out.position = base.position + Vec3{dir[0], dir[1], dir[2]} * r;
  return out;
}

}  // namespace sdn
