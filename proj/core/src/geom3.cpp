#include "rimamba/geom3.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rimamba/errors.hpp"

namespace rimamba {

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

Mat3 Mat3::identity() { return diagonal(1.0, 1.0, 1.0); }

Mat3 Mat3::diagonal(double a, double b, double c) {
  Mat3 r;
  r(0, 0) = a;
  r(1, 1) = b;
  r(2, 2) = c;
  return r;
}

Mat3 Mat3::from_rows(const Vec3& r0, const Vec3& r1, const Vec3& r2) {
  Mat3 r;
  r.set_row(0, r0);
  r.set_row(1, r1);
  r.set_row(2, r2);
  return r;
}

Mat3 Mat3::transposed() const {
  Mat3 t;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) t(i, j) = (*this)(j, i);
  return t;
}

double Mat3::determinant() const {
  const Mat3& a = *this;
  return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
         a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
         a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
}

double Mat3::max_abs() const {
  double r = 0.0;
  for (double v : m) r = std::max(r, std::abs(v));
  return r;
}

bool Mat3::all_finite() const {
  return std::all_of(m.begin(), m.end(), [](double v) { return std::isfinite(v); });
}

Mat3 operator*(const Mat3& a, const Mat3& b) {
  Mat3 r;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      r(i, j) = a(i, 0) * b(0, j) + a(i, 1) * b(1, j) + a(i, 2) * b(2, j);
  return r;
}

Mat3 operator-(const Mat3& a, const Mat3& b) {
  Mat3 r;
  for (std::size_t i = 0; i < 9; ++i) r.m[i] = a.m[i] - b.m[i];
  return r;
}

Mat3 operator+(const Mat3& a, const Mat3& b) {
  Mat3 r;
  for (std::size_t i = 0; i < 9; ++i) r.m[i] = a.m[i] + b.m[i];
  return r;
}

Mat3 operator*(const Mat3& a, double s) {
  Mat3 r;
  for (std::size_t i = 0; i < 9; ++i) r.m[i] = a.m[i] * s;
  return r;
}

Vec3 operator*(const Vec3& v, const Mat3& mat) {
  return {v[0] * mat(0, 0) + v[1] * mat(1, 0) + v[2] * mat(2, 0),
          v[0] * mat(0, 1) + v[1] * mat(1, 1) + v[2] * mat(2, 1),
          v[0] * mat(0, 2) + v[1] * mat(1, 2) + v[2] * mat(2, 2)};
}

double orthonormality_error(const Mat3& mat) {
  return (mat * mat.transposed() - Mat3::identity()).max_abs();
}

namespace {

constexpr int kMaxSweeps = 30;
constexpr double kOffDiagonalThreshold = 1e-12;

double off_diagonal_sq(const Mat3& a) {
  return 2.0 * (a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2));
}

double frobenius_sq(const Mat3& a) {
  double s = 0.0;
  for (double v : a.m) s += v * v;
  return s;
}

// One two-sided Jacobi rotation annihilating a(p, q); accumulates into v.
void jacobi_rotate(Mat3& a, Mat3& v, std::size_t p, std::size_t q) {
  const double apq = a(p, q);
  if (apq == 0.0) return;
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
  const double c = 1.0 / std::sqrt(t * t + 1.0);
  const double s = t * c;

  for (std::size_t k = 0; k < 3; ++k) {
    const double akp = a(k, p);
    const double akq = a(k, q);
    a(k, p) = c * akp - s * akq;
    a(k, q) = s * akp + c * akq;
  }
  for (std::size_t k = 0; k < 3; ++k) {
    const double apk = a(p, k);
    const double aqk = a(q, k);
    a(p, k) = c * apk - s * aqk;
    a(q, k) = s * apk + c * aqk;
  }
  a(p, q) = 0.0;
  a(q, p) = 0.0;

  for (std::size_t k = 0; k < 3; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

SymEigen eig_sym3(const Mat3& sym) {
  if (!sym.all_finite()) throw ArgumentError("eig_sym3: non-finite matrix entry");
  const double scale = std::max(1.0, sym.max_abs());
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j)
      if (std::abs(sym(i, j) - sym(j, i)) > 1e-9 * scale)
        throw ArgumentError("eig_sym3: matrix is not symmetric at (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");

  Mat3 a = sym;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) a(j, i) = a(i, j) = 0.5 * (sym(i, j) + sym(j, i));
  Mat3 v = Mat3::identity();

  const double total = frobenius_sq(a);
  const double threshold = kOffDiagonalThreshold * kOffDiagonalThreshold * total;
  int sweep = 0;
  for (; sweep < kMaxSweeps; ++sweep) {
    const double off = off_diagonal_sq(a);
    if (off == 0.0 || off <= threshold) break;
    jacobi_rotate(a, v, 0, 1);
    jacobi_rotate(a, v, 0, 2);
    jacobi_rotate(a, v, 1, 2);
  }

  std::array<std::size_t, 3> idx{0, 1, 2};
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return a(x, x) > a(y, y); });

  SymEigen out;
  out.sweeps = sweep;
  for (std::size_t j = 0; j < 3; ++j) {
    out.values[j] = a(idx[j], idx[j]);
    for (std::size_t k = 0; k < 3; ++k) out.vectors(k, j) = v(k, idx[j]);
  }
  const double lmax = std::max(std::abs(out.values[0]), std::abs(out.values[2]));
  out.has_tie = lmax == 0.0 || out.values[0] - out.values[1] < kTieTolerance * lmax ||
                out.values[1] - out.values[2] < kTieTolerance * lmax;
  return out;
}

Mat3 random_rotation(Prng& rng) {
  const double u1 = rng.uniform();
  const double u2 = rng.uniform();
  const double u3 = rng.uniform();
  const double two_pi = 2.0 * std::numbers::pi;
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  const double x = a * std::sin(two_pi * u2);
  const double y = a * std::cos(two_pi * u2);
  const double z = b * std::sin(two_pi * u3);
  const double w = b * std::cos(two_pi * u3);

  Mat3 r;
  r(0, 0) = 1 - 2 * (y * y + z * z);
  r(0, 1) = 2 * (x * y - z * w);
  r(0, 2) = 2 * (x * z + y * w);
  r(1, 0) = 2 * (x * y + z * w);
  r(1, 1) = 1 - 2 * (x * x + z * z);
  r(1, 2) = 2 * (y * z - x * w);
  r(2, 0) = 2 * (x * z - y * w);
  r(2, 1) = 2 * (y * z + x * w);
  r(2, 2) = 1 - 2 * (x * x + y * y);
  return r;
}

Mat3 relative_pose(const Frame& local, const Frame& global) {
  return local.axes * global.axes.transposed();
}

Mat3 axis_rotation(const Vec3& axis, double radians) {
  const double n = norm(axis);
  if (!(n > 0.0)) throw ArgumentError("axis_rotation: zero axis");
  const Vec3 u = axis * (1.0 / n);
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  const double t = 1.0 - c;
  // Column-vector rotation matrix, transposed for p * R.
  Mat3 col;
  col(0, 0) = c + u[0] * u[0] * t;
  col(0, 1) = u[0] * u[1] * t - u[2] * s;
  col(0, 2) = u[0] * u[2] * t + u[1] * s;
  col(1, 0) = u[1] * u[0] * t + u[2] * s;
  col(1, 1) = c + u[1] * u[1] * t;
  col(1, 2) = u[1] * u[2] * t - u[0] * s;
  col(2, 0) = u[2] * u[0] * t - u[1] * s;
  col(2, 1) = u[2] * u[1] * t + u[0] * s;
  col(2, 2) = c + u[2] * u[2] * t;
  return col.transposed();
}

}  // namespace rimamba
