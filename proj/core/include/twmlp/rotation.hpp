#pragma once

#include <array>
#include <cstddef>

namespace twmlp {

/// 3-vector of doubles. Used for positions (meters), translations, and
/// axis-angle rotations (radians * unit axis).
using Vec3 = std::array<double, 3>;

/// 6D rotation representation: the first two rows of a rotation matrix,
/// row-major. Continuous parametrization decoded via Gram-Schmidt.
using Rot6 = std::array<double, 6>;

/// Row-major 3x3 rotation matrix. Valid instances are orthonormal with
/// determinant +1; constructors do not enforce this, the producing
/// operations do.
struct Mat3 {
  std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

  double operator()(int r, int c) const { return m[static_cast<std::size_t>(r) * 3 + c]; }
  double& operator()(int r, int c) { return m[static_cast<std::size_t>(r) * 3 + c]; }

  static Mat3 identity() { return Mat3{}; }

  friend bool operator==(const Mat3& a, const Mat3& b) { return a.m == b.m; }
};

Mat3 operator*(const Mat3& a, const Mat3& b);
Vec3 operator*(const Mat3& a, const Vec3& v);
Mat3 transpose(const Mat3& a);

Vec3 operator+(const Vec3& a, const Vec3& b);
Vec3 operator-(const Vec3& a, const Vec3& b);
Vec3 operator*(double s, const Vec3& v);
double dot(const Vec3& a, const Vec3& b);
Vec3 cross(const Vec3& a, const Vec3& b);
double norm(const Vec3& v);

/// Rodrigues rotation from an axis-angle vector. The zero vector maps to the
/// identity exactly; angles below 1e-7 use series expansions of sin(t)/t and
/// (1-cos(t))/t^2 so rest poses never divide by zero.
/// Throws InvalidInputError on non-finite input.
Mat3 axis_angle_to_matrix(const Vec3& a);

/// First two rows of R, flattened row-major.
Rot6 matrix_to_rot6d(const Mat3& r);

/// Gram-Schmidt decode of a 6D rotation: row1 = normalize(r[0..3]),
/// row2 = normalize(r[3..6] orthogonalized against row1), row3 = row1 x row2.
/// Throws DegenerateRotationError when either normalization sees a norm
/// below 1e-8, and InvalidInputError on non-finite input.
Mat3 rot6d_to_matrix(const Rot6& r);

/// R_prev^T * R_cur: the rotation taking the previous orientation to the
/// current one.
Mat3 relative_rotation(const Mat3& r_prev, const Mat3& r_cur);

/// Geodesic distance between two rotations in degrees, range [0, 180].
/// The trace argument is clamped to [-1, 1] so floating-point drift cannot
/// produce NaN.
double geodesic_angle_deg(const Mat3& ra, const Mat3& rb);

/// True when MᵀM = I and det(M) = +1, both within tol.
bool is_rotation_matrix(const Mat3& r, double tol = 1e-6);

}  // namespace twmlp
