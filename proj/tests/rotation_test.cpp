#include "twmlp/rotation.hpp"

#include <cmath>

#include "doctest.h"
#include "test_util.hpp"
#include "twmlp/errors.hpp"
#include "twmlp/rng.hpp"

using namespace twmlp;
using twtest::max_abs_diff;
using twtest::quat_from_axis_angle;
using twtest::quat_mul;
using twtest::quat_to_matrix;

TEST_CASE("axis-angle matches the quaternion oracle") {
  Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    const Vec3 a = twtest::random_axis_angle(rng);
    const Mat3 r = axis_angle_to_matrix(a);
    const Mat3 q = quat_to_matrix(quat_from_axis_angle(a));
    CHECK(max_abs_diff(r, q) < 1e-12);
    CHECK(is_rotation_matrix(r, 1e-9));
  }
}

TEST_CASE("tiny angles use the series path and stay consistent") {
  for (double scale : {0.0, 1e-12, 1e-9, 1e-8, 9.9e-8, 1.1e-7}) {
    const Vec3 a{scale * 0.6, scale * -0.8, scale * 0.0};
    const Mat3 r = axis_angle_to_matrix(a);
    const Mat3 q = quat_to_matrix(quat_from_axis_angle(a));
    CHECK(max_abs_diff(r, q) < 1e-14);
  }
  CHECK(axis_angle_to_matrix({0, 0, 0}) == Mat3::identity());
}

TEST_CASE("2pi/3 about the (1,1,1) diagonal permutes the axes") {
  const double c = 2.0 * 3.14159265358979323846 / 3.0 / std::sqrt(3.0);
  const Mat3 r = axis_angle_to_matrix({c, c, c});
  // x -> y -> z -> x, a known exact permutation matrix.
  Mat3 expected;
  expected.m = {0, 0, 1, 1, 0, 0, 0, 1, 0};
  CHECK(max_abs_diff(r, expected) < 1e-12);
}

TEST_CASE("rotation composition matches quaternion composition") {
  Rng rng(12);
  for (int i = 0; i < 200; ++i) {
    const Vec3 a = twtest::random_axis_angle(rng);
    const Vec3 b = twtest::random_axis_angle(rng);
    const Mat3 lhs = axis_angle_to_matrix(a) * axis_angle_to_matrix(b);
    const Mat3 rhs = quat_to_matrix(quat_mul(quat_from_axis_angle(a), quat_from_axis_angle(b)));
    CHECK(max_abs_diff(lhs, rhs) < 1e-12);
  }
}

TEST_CASE("6D round trip over 1000 random rotations") {
  Rng rng(13);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = twtest::random_rotation(rng);
    const Mat3 back = rot6d_to_matrix(matrix_to_rot6d(r));
    worst = std::max(worst, max_abs_diff(r, back));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("6D decode orthonormalizes noisy input") {
  Rng rng(14);
  for (int i = 0; i < 200; ++i) {
    Rot6 r6;
    for (double& v : r6) v = rng.uniform(-2.0, 2.0);
    const double n = std::sqrt(r6[0] * r6[0] + r6[1] * r6[1] + r6[2] * r6[2]);
    if (n < 1e-3) continue;
    const Mat3 r = rot6d_to_matrix(r6);
    CHECK(is_rotation_matrix(r, 1e-9));
    // First row is the normalized first half of the input.
    CHECK(r(0, 0) == doctest::Approx(r6[0] / n).epsilon(1e-9));
  }
}

TEST_CASE("degenerate 6D inputs are rejected") {
  CHECK_THROWS_AS(rot6d_to_matrix({0, 0, 0, 0, 1, 0}), DegenerateRotationError);
  CHECK_THROWS_AS(rot6d_to_matrix({1, 0, 0, 2, 0, 0}), DegenerateRotationError);  // collinear
  CHECK_THROWS_AS(rot6d_to_matrix({1e-9, 0, 0, 0, 1, 0}), DegenerateRotationError);
  const double nan = std::nan("");
  CHECK_THROWS_AS(rot6d_to_matrix({nan, 0, 0, 0, 1, 0}), InvalidInputError);
}

TEST_CASE("relative rotation recovers the step between orientations") {
  Rng rng(15);
  for (int i = 0; i < 200; ++i) {
    const Mat3 prev = twtest::random_rotation(rng);
    const Mat3 step = twtest::random_rotation(rng);
    const Mat3 cur = prev * step;
    CHECK(max_abs_diff(relative_rotation(prev, cur), step) < 1e-12);
  }
}

TEST_CASE("geodesic angle recovers rotation magnitude in degrees") {
  const Vec3 axis{0.0, 1.0, 0.0};
  for (double deg : {0.0, 10.0, 45.0, 90.0, 179.0, 180.0}) {
    const double rad = deg * 3.14159265358979323846 / 180.0;
    const Mat3 r = axis_angle_to_matrix({axis[0] * rad, axis[1] * rad, axis[2] * rad});
    CHECK(geodesic_angle_deg(Mat3::identity(), r) == doctest::Approx(deg).epsilon(1e-9));
  }
  // Angle between two rotations about the same axis is the angle difference.
  const Mat3 a = axis_angle_to_matrix({0, 0.5, 0});
  const Mat3 b = axis_angle_to_matrix({0, 1.25, 0});
  CHECK(geodesic_angle_deg(a, b) ==
        doctest::Approx(0.75 * 180.0 / 3.14159265358979323846).epsilon(1e-9));
}

TEST_CASE("is_rotation_matrix rejects scaling and reflection") {
  CHECK(is_rotation_matrix(Mat3::identity()));
  Mat3 scaled;
  scaled.m = {1.001, 0, 0, 0, 1, 0, 0, 0, 1};
  CHECK_FALSE(is_rotation_matrix(scaled));
  Mat3 reflect;
  reflect.m = {1, 0, 0, 0, 1, 0, 0, 0, -1};  // orthogonal but det -1
  CHECK_FALSE(is_rotation_matrix(reflect));
}

TEST_CASE("non-finite axis-angle input is rejected") {
  CHECK_THROWS_AS(axis_angle_to_matrix({std::nan(""), 0, 0}), InvalidInputError);
  CHECK_THROWS_AS(axis_angle_to_matrix({0, HUGE_VAL, 0}), InvalidInputError);
}
