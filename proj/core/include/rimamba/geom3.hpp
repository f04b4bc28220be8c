#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "rimamba/prng.hpp"

namespace rimamba {

/// Points and directions are row vectors; a rotation acts as p * R.
using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 operator-(const Vec3& a, const Vec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline Vec3 operator*(const Vec3& a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
inline double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline double squared_norm(const Vec3& a) { return dot(a, a); }
double norm(const Vec3& a);
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

/// 3x3 matrix, row-major.
struct Mat3 {
  std::array<double, 9> m{};

  double& operator()(std::size_t r, std::size_t c) { return m[r * 3 + c]; }
  double operator()(std::size_t r, std::size_t c) const { return m[r * 3 + c]; }

  Vec3 row(std::size_t r) const { return {m[r * 3], m[r * 3 + 1], m[r * 3 + 2]}; }
  Vec3 col(std::size_t c) const { return {m[c], m[3 + c], m[6 + c]}; }
  void set_row(std::size_t r, const Vec3& v) {
    m[r * 3] = v[0];
    m[r * 3 + 1] = v[1];
    m[r * 3 + 2] = v[2];
  }

  static Mat3 identity();
  static Mat3 diagonal(double a, double b, double c);
  static Mat3 from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2);

  Mat3 transposed() const;
  double determinant() const;
  double max_abs() const;
  bool all_finite() const;

  friend bool operator==(const Mat3&, const Mat3&) = default;
};

Mat3 operator*(const Mat3& a, const Mat3& b);
Mat3 operator-(const Mat3& a, const Mat3& b);
Mat3 operator+(const Mat3& a, const Mat3& b);
Mat3 operator*(const Mat3& a, double s);

/// Row vector times matrix: v * M.
Vec3 operator*(const Vec3& v, const Mat3& mat);

/// |M M^T - I|_inf
double orthonormality_error(const Mat3& mat);

enum class FrameKind { local, global };

/// Orthonormal basis whose rows are the frame axes. Handedness is not
/// forced; det() is exposed so callers can inspect it.
struct Frame {
  Mat3 axes = Mat3::identity();
  FrameKind kind = FrameKind::local;

  Vec3 axis(std::size_t i) const { return axes.row(i); }
  double det() const { return axes.determinant(); }
};

struct SymEigen {
  std::array<double, 3> values{};  // descending
  Mat3 vectors;                    // column j is the unit eigenvector of values[j]
  bool has_tie = false;            // two eigenvalues within kTieTolerance * max|lambda|
  int sweeps = 0;
};

inline constexpr double kTieTolerance = 1e-9;

/// Cyclic Jacobi eigendecomposition of a symmetric 3x3 matrix. Throws
/// ArgumentError when `sym` is not symmetric within 1e-9 (relative to its
/// largest entry, floor 1).
SymEigen eig_sym3(const Mat3& sym);

/// Uniformly distributed rotation (unit quaternion, Shoemake's method).
Mat3 random_rotation(Prng& rng);

/// Pose of `local` expressed in `global`: entry (a, b) = <local axis a, global axis b>.
/// Unchanged when both frames co-rotate with the cloud (F -> F R).
Mat3 relative_pose(const Frame& local, const Frame& global);

/// Rotation by `radians` about a unit axis, in the row-vector convention.
Mat3 axis_rotation(const Vec3& axis, double radians);

}  // namespace rimamba
