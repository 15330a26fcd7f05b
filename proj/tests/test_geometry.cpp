// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "sdn/geometry.hpp"
#include "sdn/oracles.hpp"

using namespace sdn;

namespace {
Quaternion random_unit(Rng& rng) {
  auto a = rng.unit_vector3();
  return Quaternion::from_axis_angle(Vec3{a[0], a[1], a[2]}, rng.uniform(0, kPi));
}
}  // namespace

TEST_CASE("nqd is zero for identical and antipodal quaternions") {
  Rng rng(42);
  for (int i = 0; i < 100; ++i) {
    Quaternion q = random_unit(rng);
    CHECK(nqd(q, q) == 0.0);
    CHECK(nqd(q, -q) == 0.0);
  }
}

TEST_CASE("nqd rejects non-unit input") {
  Quaternion q{1, 0, 0, 0};
  Quaternion bad{1.1, 0, 0, 0};
  CHECK_THROWS_AS(nqd(q, bad), InvalidArgument);
  CHECK_THROWS_AS(nqd(bad, q), InvalidArgument);
}

TEST_CASE("nqd is symmetric and sign-flip invariant") {
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    Quaternion a = random_unit(rng), b = random_unit(rng);
    double v = nqd(a, b);
    CHECK(v == nqd(b, a));
    CHECK(v == nqd(-a, b));
    CHECK(v == nqd(a, -b));
    CHECK(v >= 0.0);
    CHECK(v <= std::sqrt(2.0) + 1e-12);
  }
}

TEST_CASE("nqd equals 2 sin(theta/4) of the relative rotation angle") {
  Rng rng(3);
  // full-turn grid: angles past 180 fold back to the minimal rotation angle
  for (int i = 0; i < 360; ++i) {
    double theta = deg2rad(i);
    auto axis = rng.unit_vector3();
    Quaternion base = random_unit(rng);
    Quaternion rot = Quaternion::from_axis_angle(Vec3{axis[0], axis[1], axis[2]}, theta) * base;
    double folded = std::min(theta, 2 * kPi - theta);
    CHECK(nqd(base, rot.normalized()) == doctest::Approx(2 * std::sin(folded / 4)).epsilon(1e-9));
  }
  // 180 degrees attains the maximum sqrt(2)
  Quaternion id = Quaternion::identity();
  Quaternion half = Quaternion::from_axis_angle({0, 1, 0}, kPi);
  CHECK(nqd(id, half) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  // cross-check against the independent angle-based reference
  for (int i = 0; i < 500; ++i) {
    Quaternion a = random_unit(rng), b = random_unit(rng);
    CHECK(std::abs(nqd(a, b) - oracle::nqd_reference(a, b)) < 1e-9);
  }
}

TEST_CASE("q and -q produce the same rotation matrix") {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    Quaternion q = random_unit(rng);
    Mat3 m1 = q.to_matrix();
    Mat3 m2 = (-q).to_matrix();
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) CHECK(m1[r][c] == doctest::Approx(m2[r][c]).epsilon(1e-12));
  }
}

TEST_CASE("sample_pose: degenerate range gives one pose, fixed seed repeats") {
  PoseRange range;
  range.elev_min = range.elev_max = 45;
  range.azim_min = range.azim_max = 10;
  range.dist_min = range.dist_max = 5;
  range.roll_min = range.roll_max = 0;
  CameraIntrinsics intr;
  Rng rng(1);
  CameraPose first = sample_pose(range, intr, rng);
  for (int i = 0; i < 20; ++i) {
    CameraPose p = sample_pose(range, intr, rng);
    CHECK(p.position.x == first.position.x);
    CHECK(p.orientation.w == first.orientation.w);
  }

  PoseRange wide;
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) {
    CameraPose pa = sample_pose(wide, intr, a);
    CameraPose pb = sample_pose(wide, intr, b);
    CHECK(pa.position.x == pb.position.x);
    CHECK(pa.position.y == pb.position.y);
    CHECK(pa.orientation.z == pb.orientation.z);
  }
}

TEST_CASE("sample_pose: elevation stays within bounds over many draws") {
  PoseRange range;
  range.elev_min = 30;
  range.elev_max = 60;
  CameraIntrinsics intr;
  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    CameraPose p = sample_pose(range, intr, rng);
    double elev = rad2deg(std::asin(p.position.y / p.position.norm()));
    CHECK(elev >= 30 - 1e-9);
    CHECK(elev <= 60 + 1e-9);
  }
}

TEST_CASE("sample_pose rejects invalid ranges") {
  CameraIntrinsics intr;
  Rng rng(1);
  PoseRange bad;
  bad.elev_min = 50;
  bad.elev_max = 40;
  CHECK_THROWS_AS(sample_pose(bad, intr, rng), InvalidArgument);
  PoseRange high;
  high.elev_max = 95;
  CHECK_THROWS_AS(sample_pose(high, intr, rng), InvalidArgument);
}

TEST_CASE("perturb_pose honors its orientation budget") {
  CameraIntrinsics intr;
  PoseRange range;
  Rng rng(13);
  CameraPose base = sample_pose(range, intr, rng);

  SUBCASE("zero budget returns the base pose exactly") {
    for (int i = 0; i < 10; ++i) {
      CameraPose p = perturb_pose(base, 0.0, rng);
      CHECK(p.orientation.w == base.orientation.w);
      CHECK(p.orientation.x == base.orientation.x);
      CHECK(p.position.x == base.position.x);
      CHECK(p.position.y == base.position.y);
    }
  }

  SUBCASE("0.1 budget holds over 10^4 draws and covers the range") {
    // nQD 0.1 corresponds to a rotation angle of 4 asin(0.05), about 11.47 deg
    double angle_at_budget = rad2deg(4 * std::asin(0.05));
    CHECK(angle_at_budget == doctest::Approx(11.4665).epsilon(1e-3));
    double max_seen = 0;
    for (int i = 0; i < 10000; ++i) {
      CameraPose p = perturb_pose(base, 0.1, rng);
      double v = nqd(base.orientation, p.orientation);
      CHECK(v <= 0.1);
      max_seen = std::max(max_seen, v);
    }
    CHECK(max_seen > 0.09);
  }

  SUBCASE("sqrt(2) budget never throws or violates") {
    for (int i = 0; i < 1000; ++i) {
      CameraPose p = perturb_pose(base, std::sqrt(2.0), rng);
      CHECK(nqd(base.orientation, p.orientation) <= std::sqrt(2.0) + 1e-12);
    }
  }

  SUBCASE("budget outside [0, sqrt(2)] is rejected") {
    CHECK_THROWS_AS(perturb_pose(base, -0.1, rng), InvalidArgument);
    CHECK_THROWS_AS(perturb_pose(base, 1.5, rng), InvalidArgument);
  }
}

TEST_CASE("camera looks at the origin") {
  PoseRange range;
  CameraIntrinsics intr;
  Rng rng(17);
  for (int i = 0; i < 100; ++i) {
    CameraPose p = sample_pose(range, intr, rng);
    auto uvz = p.project(Vec3{0, 0, 0});
    CHECK(uvz[0] == doctest::Approx(intr.cx).epsilon(1e-6));
    CHECK(uvz[1] == doctest::Approx(intr.cy).epsilon(1e-6));
    CHECK(uvz[2] == doctest::Approx(p.position.norm()).epsilon(1e-9));
  }
}
