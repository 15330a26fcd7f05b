// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cmath>

#include "sdn/rng.hpp"
#include "sdn/util.hpp"

namespace sdn {

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

struct Vec3 {
  double x = 0, y = 0, z = 0;

  Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
  Vec3 operator-() const { return {-x, -y, -z}; }
  double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
  Vec3 cross(const Vec3& o) const {
    return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
  }
  double norm() const { return std::sqrt(dot(*this)); }
  Vec3 normalized() const {
    double n = norm();
    return n > 0 ? Vec3{x / n, y / n, z / n} : Vec3{0, 0, 0};
  }
};

using Mat3 = std::array<std::array<double, 3>, 3>;

inline Vec3 mat3_apply(const Mat3& m, const Vec3& v) {
  return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
          m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
          m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
}

// Unit quaternion, scalar-first (w, x, y, z), right-handed.
struct Quaternion {
  double w = 1, x = 0, y = 0, z = 0;

  static Quaternion identity() { return {1, 0, 0, 0}; }

  static Quaternion from_axis_angle(const Vec3& axis, double angle_rad) {
    Vec3 a = axis.normalized();
    double h = 0.5 * angle_rad;
    double s = std::sin(h);
    return {std::cos(h), a.x * s, a.y * s, a.z * s};
  }

  // Rotation matrix -> quaternion (Shepperd's method).
  static Quaternion from_matrix(const Mat3& m);

  double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }

  Quaternion normalized() const {
    double n = norm();
    if (n == 0) throw InvalidArgument("cannot normalize zero quaternion");
    return {w / n, x / n, y / n, z / n};
  }

  Quaternion operator-() const { return {-w, -x, -y, -z}; }

  Quaternion operator*(const Quaternion& o) const {
    return {w * o.w - x * o.x - y * o.y - z * o.z, w * o.x + x * o.w + y * o.z - z * o.y,
            w * o.y - x * o.z + y * o.w + z * o.x, w * o.z + x * o.y - y * o.x + z * o.w};
  }

  double dot(const Quaternion& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }

  Mat3 to_matrix() const {
    double xx = x * x, yy = y * y, zz = z * z;
    double wx = w * x, wy = w * y, wz = w * z;
    double xy = x * y, xz = x * z, yz = y * z;
    return {{{1 - 2 * (yy + zz), 2 * (xy - wz), 2 * (xz + wy)},
             {2 * (xy + wz), 1 - 2 * (xx + zz), 2 * (yz - wx)},
             {2 * (xz - wy), 2 * (yz + wx), 1 - 2 * (xx + yy)}}};
  }

  Vec3 rotate(const Vec3& v) const { return mat3_apply(to_matrix(), v); }

  // Canonical sign for serialization: first nonzero component positive.
  Quaternion canonical() const {
    const double c[4] = {w, x, y, z};
    for (double v : c) {
      if (v > 0) return *this;
      if (v < 0) return -*this;
    }
    return *this;
  }
};

// Norm of quaternion difference: min(||q1 - q2||, ||q1 + q2||), range [0, sqrt(2)].
// Both inputs must be unit quaternions (norm within 1e-6 of 1).
double nqd(const Quaternion& q1, const Quaternion& q2);

// Relative rotation angle in [0, pi] between the rotations q1 and q2.
double rotation_angle_between(const Quaternion& q1, const Quaternion& q2);

struct CameraIntrinsics {
  double focal_px = 140.0;  // focal length in pixels
  double cx = 64.0, cy = 64.0;
  int width = 128, height = 128;
};

// orientation maps world coordinates to camera coordinates
// (camera frame: x right, y down, z forward); position is in world units.
struct CameraPose {
  Quaternion orientation;
  Vec3 position;
  CameraIntrinsics intrinsics;

  void validate() const {
    if (std::abs(orientation.norm() - 1.0) > 1e-6)
      throw InvalidArgument("camera orientation is not unit");
    if (intrinsics.focal_px <= 0) throw InvalidArgument("focal length must be positive");
    if (intrinsics.width < 16 || intrinsics.height < 16)
      throw InvalidArgument("image size must be at least 16x16");
  }

  Vec3 world_to_camera(const Vec3& p) const { return orientation.rotate(p - position); }

  // Projects a world point to pixel coordinates; z is camera-space depth.
  std::array<double, 3> project(const Vec3& p) const {
    Vec3 c = world_to_camera(p);
    return {intrinsics.cx + intrinsics.focal_px * c.x / c.z,
            intrinsics.cy + intrinsics.focal_px * c.y / c.z, c.z};
  }
};

// Intervals in degrees (distance in scene units). Elevation is measured from
// the horizontal plane; 90 looks straight down.
struct PoseRange {
  double elev_min = 30, elev_max = 70;
  double azim_min = -60, azim_max = 60;
  double dist_min = 4.8, dist_max = 8.0;
  double roll_min = -10, roll_max = 10;

  void validate() const {
    if (elev_min > elev_max || azim_min > azim_max || dist_min > dist_max || roll_min > roll_max)
      throw InvalidArgument("empty interval in pose range");
    if (elev_min < 0 || elev_max > 90)
      throw InvalidArgument("elevation range must lie within [0, 90] degrees");
    if (dist_min <= 0) throw InvalidArgument("distance must be positive");
  }
};

// Camera orientation looking from `position` at the world origin, rolled by
// roll_rad about the view axis. World up is +y.
Quaternion look_at_origin(const Vec3& position, double roll_rad);

// Uniform sample over the range parameters; the camera looks at the origin.
CameraPose sample_pose(const PoseRange& range, const CameraIntrinsics& intr, Rng& rng);

// Random orientation wobble with nqd(base, result) <= max_nqd, plus a position
// offset within pos_frac * (max_nqd / sqrt(2)) * distance. max_nqd = 0 returns
// the base pose exactly.
CameraPose perturb_pose(const CameraPose& base, double max_nqd, Rng& rng,
                        double pos_frac = 0.2);

}  // namespace sdn
