#pragma once

#include <array>
#include <span>
#include <vector>

#include "rimamba/geom3.hpp"
#include "rimamba/patcher.hpp"

namespace rimamba {

struct RfcResult {
  Frame frame;
  std::array<double, 3> eigenvalues{};  // descending
  /// Adjacent eigenvalues tie, the smallest one vanishes (relative to the
  /// largest, kTieTolerance), or an axis sign could not be decided.
  bool degenerate = false;
  /// count(x.a > 0) - count(x.a < 0) per axis after disambiguation (>= 0).
  std::array<long, 3> sign_balance{};
};

/// Reference frame of a point set: PCA axes of the mean-centered covariance
/// in descending eigenvalue order, each axis flipped toward the side holding
/// more points (cubed projection sum breaks exact count ties).
/// Throws SizeError for fewer than 3 points and DegenerateError when all
/// points coincide.
RfcResult rfc(std::span<const Vec3> x, FrameKind kind = FrameKind::local);

/// x * F^T: coordinates of every point along the frame axes.
std::vector<Vec3> align(std::span<const Vec3> x, const Frame& f);
Vec3 align(const Vec3& x, const Frame& f);

/// rfc() of every patch; errors name the failing patch.
std::vector<RfcResult> patch_frames(const PatchSet& ps);

}  // namespace rimamba
