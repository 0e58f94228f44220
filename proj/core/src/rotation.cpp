#include "twmlp/rotation.hpp"

#include <algorithm>
#include <cmath>

#include "twmlp/errors.hpp"

namespace twmlp {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool all_finite(const double* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(p[i])) return false;
  }
  return true;
}

}  // namespace

Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      out(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j) + a(i, 2) * b(2, j);
    }
  }
  return out;
}

Vec3 operator*(const Mat3& a, const Vec3& v) {
  return {a(0, 0) * v[0] + a(0, 1) * v[1] + a(0, 2) * v[2],
          a(1, 0) * v[0] + a(1, 1) * v[1] + a(1, 2) * v[2],
          a(2, 0) * v[0] + a(2, 1) * v[1] + a(2, 2) * v[2]};
}

Mat3 transpose(const Mat3& a) {
  Mat3 out;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) out(i, j) = a(j, i);
  }
  return out;
}

Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
Vec3 operator*(double s, const Vec3& v) { return {s * v[0], s * v[1], s * v[2]}; }

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }

Mat3 axis_angle_to_matrix(const Vec3& a) {
  if (!all_finite(a.data(), 3)) {
    throw InvalidInputError("axis_angle_to_matrix: non-finite input");
  }
  const double theta2 = dot(a, a);
  const double theta = std::sqrt(theta2);

  // sin(t)/t and (1-cos(t))/t^2, series-expanded near zero.
  double s, c;
  if (theta < 1e-7) {
    s = 1.0 - theta2 / 6.0;
    c = 0.5 - theta2 / 24.0;
  } else {
    s = std::sin(theta) / theta;
    c = (1.0 - std::cos(theta)) / theta2;
  }

  // R = I + s*[a]_x + c*[a]_x^2
  const double x = a[0], y = a[1], z = a[2];
  Mat3 r;
  r(0, 0) = 1.0 - c * (y * y + z * z);
  r(0, 1) = c * x * y - s * z;
  r(0, 2) = c * x * z + s * y;
  r(1, 0) = c * x * y + s * z;
  r(1, 1) = 1.0 - c * (x * x + z * z);
  r(1, 2) = c * y * z - s * x;
  r(2, 0) = c * x * z - s * y;
  r(2, 1) = c * y * z + s * x;
  r(2, 2) = 1.0 - c * (x * x + y * y);
  return r;
}

Rot6 matrix_to_rot6d(const Mat3& r) {
  return {r(0, 0), r(0, 1), r(0, 2), r(1, 0), r(1, 1), r(1, 2)};
}

Mat3 rot6d_to_matrix(const Rot6& r) {
  if (!all_finite(r.data(), 6)) {
    throw InvalidInputError("rot6d_to_matrix: non-finite input");
  }
  Vec3 a{r[0], r[1], r[2]};
  Vec3 b{r[3], r[4], r[5]};

  const double na = norm(a);
  if (na < 1e-8) {
    throw DegenerateRotationError("rot6d_to_matrix: first row norm below 1e-8");
  }
  Vec3 row1 = (1.0 / na) * a;

  Vec3 rej = b - dot(b, row1) * row1;
  const double nr = norm(rej);
  if (nr < 1e-8) {
    throw DegenerateRotationError("rot6d_to_matrix: second row parallel to first");
  }
  Vec3 row2 = (1.0 / nr) * rej;
  Vec3 row3 = cross(row1, row2);

  Mat3 out;
  for (int j = 0; j < 3; ++j) {
    out(0, j) = row1[j];
    out(1, j) = row2[j];
    out(2, j) = row3[j];
  }
  return out;
}

Mat3 relative_rotation(const Mat3& r_prev, const Mat3& r_cur) {
  return transpose(r_prev) * r_cur;
}

double geodesic_angle_deg(const Mat3& ra, const Mat3& rb) {
  if (ra == rb) return 0.0;  // exact zero for identical inputs, no acos drift
  const Mat3 d = transpose(ra) * rb;
  const double tr = d(0, 0) + d(1, 1) + d(2, 2);
  const double arg = std::clamp((tr - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(arg) * 180.0 / kPi;
}

bool is_rotation_matrix(const Mat3& r, double tol) {
  const Mat3 g = transpose(r) * r;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const double want = (i == j) ? 1.0 : 0.0;
      if (std::abs(g(i, j) - want) > tol) return false;
    }
  }
  const double det = r(0, 0) * (r(1, 1) * r(2, 2) - r(1, 2) * r(2, 1)) -
                     r(0, 1) * (r(1, 0) * r(2, 2) - r(1, 2) * r(2, 0)) +
                     r(0, 2) * (r(1, 0) * r(2, 1) - r(1, 1) * r(2, 0));
  return std::abs(det - 1.0) <= tol;
}

}  // namespace twmlp
