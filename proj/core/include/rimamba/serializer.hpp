#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "rimamba/cloud_io.hpp"
#include "rimamba/frames.hpp"
#include "rimamba/patcher.hpp"

namespace rimamba {

using HilbertCell = std::array<std::uint32_t, 3>;

/// Index of `cell` on the 3D Hilbert curve with `bits` bits per axis
/// (Skilling's transpose algorithm). Requires 1 <= bits <= 20.
std::uint64_t hilbert_encode(const HilbertCell& cell, int bits);
HilbertCell hilbert_decode(std::uint64_t index, int bits);

inline constexpr int kSerializationBits = 10;

struct HilbertOrder {
  std::vector<std::uint64_t> codes;  // per patch, in patch-index order
  std::vector<std::size_t> order;    // patch indices sorted by (code, index)
};

/// Min-max normalizes each axis of `coords` to [0, 1], quantizes to `bits`
/// bits and sorts by Hilbert code. A zero-extent axis maps to cell 0.
HilbertOrder hilbert_order(std::span<const Vec3> coords, int bits = kSerializationBits);

struct SerializedPatches {
  std::vector<std::size_t> order;  // I_H: serialized position -> patch index
  std::vector<std::uint64_t> codes;
  std::vector<Vec3> projected_centers;  // centers * grf^T
  RfcResult grf;
  PatchSet patch_set;
  std::vector<RfcResult> lrfs;

  /// Inverse of `order`: patch index -> serialized position.
  std::vector<std::size_t> ranks() const;
};

/// Global frame from every cloud point, centers projected into it, Hilbert
/// sorted. Throws DegenerateError (with eigenvalue gaps) if the global frame
/// is degenerate.
SerializedPatches serialize(PatchSet ps, std::vector<RfcResult> lrfs, const PointCloud& cloud,
                            int bits = kSerializationBits);

}  // namespace rimamba
