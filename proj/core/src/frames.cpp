#include "rimamba/frames.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rimamba/errors.hpp"

namespace rimamba {

RfcResult rfc(std::span<const Vec3> x, FrameKind kind) {
  const std::size_t n = x.size();
  if (n < 3) throw SizeError("rfc: need at least 3 points, got " + std::to_string(n));

  Vec3 mean{0.0, 0.0, 0.0};
  for (const Vec3& p : x) mean = mean + p;
  mean = mean * (1.0 / static_cast<double>(n));

  Mat3 cov;
  for (const Vec3& p : x) {
    const Vec3 d = p - mean;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = i; j < 3; ++j) cov(i, j) += d[i] * d[j];
  }
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i; j < 3; ++j) {
      cov(i, j) /= static_cast<double>(n);
      cov(j, i) = cov(i, j);
    }
  if (cov(0, 0) + cov(1, 1) + cov(2, 2) == 0.0) throw DegenerateError("rfc: all points coincide (zero covariance)");

  const SymEigen eig = eig_sym3(cov);

  RfcResult out;
  out.eigenvalues = eig.values;
  out.frame.kind = kind;
  out.degenerate = eig.has_tie || eig.values[2] <= kTieTolerance * std::abs(eig.values[0]);

  for (std::size_t a = 0; a < 3; ++a) {
    Vec3 axis = eig.vectors.col(a);
    long balance = 0;
    double cubed = 0.0;
    for (const Vec3& p : x) {
      const double proj = dot(p - mean, axis);
      balance += (proj > 0.0) - (proj < 0.0);
      cubed += proj * proj * proj;
    }
    bool flip = balance < 0;
    if (balance == 0) {
      flip = cubed < 0.0;
      if (cubed == 0.0) out.degenerate = true;
    }
    if (flip) {
      axis = axis * -1.0;
      balance = -balance;
    }
    out.sign_balance[a] = balance;
    out.frame.axes.set_row(a, axis);
  }
  return out;
}

Vec3 align(const Vec3& x, const Frame& f) { return {dot(x, f.axis(0)), dot(x, f.axis(1)), dot(x, f.axis(2))}; }

std::vector<Vec3> align(std::span<const Vec3> x, const Frame& f) {
  std::vector<Vec3> out;
  out.reserve(x.size());
  for (const Vec3& p : x) out.push_back(align(p, f));
  return out;
}

std::vector<RfcResult> patch_frames(const PatchSet& ps) {
  std::vector<RfcResult> out;
  out.reserve(ps.num_patches());
  for (std::size_t i = 0; i < ps.num_patches(); ++i) {
    try {
      out.push_back(rfc(ps.patch(i), FrameKind::local));
    } catch (const Error& e) {
      rethrow_with_context(e, "patch " + std::to_string(i));
    }
  }
  return out;
}

}  // namespace rimamba
