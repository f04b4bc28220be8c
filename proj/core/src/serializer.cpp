#include "rimamba/serializer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>

#include "rimamba/errors.hpp"

namespace rimamba {

namespace {

constexpr int kDims = 3;

void check_bits(int bits) {
  if (bits < 1 || bits > 20) throw ArgumentError("hilbert: bits must be in [1, 20], got " + std::to_string(bits));
}

}  // namespace

std::uint64_t hilbert_encode(const HilbertCell& cell, int bits) {
  check_bits(bits);
  const std::uint32_t side = 1u << bits;
  std::array<std::uint32_t, kDims> x = cell;
  for (int i = 0; i < kDims; ++i)
    if (x[i] >= side)
      throw ArgumentError("hilbert_encode: coordinate " + std::to_string(x[i]) + " out of range for " +
                          std::to_string(bits) + " bits");

  const std::uint32_t m = 1u << (bits - 1);
  // inverse undo
  for (std::uint32_t q = m; q > 1; q >>= 1) {
    const std::uint32_t p = q - 1;
    for (int i = 0; i < kDims; ++i) {
      if (x[i] & q) {
        x[0] ^= p;
      } else {
        const std::uint32_t t = (x[0] ^ x[i]) & p;
        x[0] ^= t;
        x[i] ^= t;
      }
    }
  }
  // gray encode
  for (int i = 1; i < kDims; ++i) x[i] ^= x[i - 1];
  std::uint32_t t = 0;
  for (std::uint32_t q = m; q > 1; q >>= 1)
    if (x[kDims - 1] & q) t ^= q - 1;
  for (int i = 0; i < kDims; ++i) x[i] ^= t;

  std::uint64_t index = 0;
  for (int b = bits - 1; b >= 0; --b)
    for (int i = 0; i < kDims; ++i) index = (index << 1) | ((x[i] >> b) & 1u);
  return index;
}

HilbertCell hilbert_decode(std::uint64_t index, int bits) {
  check_bits(bits);
  if (index >> (kDims * bits) != 0)
    throw ArgumentError("hilbert_decode: index out of range for " + std::to_string(bits) + " bits");

  HilbertCell x{0, 0, 0};
  for (int b = bits - 1; b >= 0; --b)
    for (int i = 0; i < kDims; ++i) {
      const int shift = b * kDims + (kDims - 1 - i);
      x[i] |= static_cast<std::uint32_t>((index >> shift) & 1u) << b;
    }

  const std::uint32_t n = 2u << (bits - 1);
  // gray decode
  std::uint32_t t = x[kDims - 1] >> 1;
  for (int i = kDims - 1; i > 0; --i) x[i] ^= x[i - 1];
  x[0] ^= t;
  // undo excess work
  for (std::uint32_t q = 2; q != n; q <<= 1) {
    const std::uint32_t p = q - 1;
    for (int i = kDims - 1; i >= 0; --i) {
      if (x[i] & q) {
        x[0] ^= p;
      } else {
        t = (x[0] ^ x[i]) & p;
        x[0] ^= t;
        x[i] ^= t;
      }
    }
  }
  return x;
}

HilbertOrder hilbert_order(std::span<const Vec3> coords, int bits) {
  check_bits(bits);
  HilbertOrder out;
  const std::size_t g = coords.size();
  if (g == 0) return out;

  Vec3 lo = coords[0], hi = coords[0];
  for (const Vec3& c : coords)
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], c[a]);
      hi[a] = std::max(hi[a], c[a]);
    }

  const std::uint32_t side = 1u << bits;
  out.codes.reserve(g);
  for (const Vec3& c : coords) {
    HilbertCell cell{};
    for (int a = 0; a < 3; ++a) {
      const double extent = hi[a] - lo[a];
      const double u = extent > 0.0 ? (c[a] - lo[a]) / extent : 0.0;
      const double scaled = std::floor(u * static_cast<double>(side));
      cell[a] = static_cast<std::uint32_t>(std::clamp(scaled, 0.0, static_cast<double>(side - 1)));
    }
    out.codes.push_back(hilbert_encode(cell, bits));
  }

  out.order.resize(g);
  std::iota(out.order.begin(), out.order.end(), std::size_t{0});
  std::sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) {
    return out.codes[a] != out.codes[b] ? out.codes[a] < out.codes[b] : a < b;
  });
  return out;
}

std::vector<std::size_t> SerializedPatches::ranks() const {
  std::vector<std::size_t> r(order.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) r[order[pos]] = pos;
  return r;
}

SerializedPatches serialize(PatchSet ps, std::vector<RfcResult> lrfs, const PointCloud& cloud, int bits) {
  if (lrfs.size() != ps.num_patches())
    throw ArgumentError("serialize: " + std::to_string(lrfs.size()) + " frames for " +
                        std::to_string(ps.num_patches()) + " patches");

  SerializedPatches out;
  out.grf = rfc(cloud.points, FrameKind::global);
  if (out.grf.degenerate) {
    const auto& l = out.grf.eigenvalues;
    std::ostringstream msg;
    msg.precision(6);
    msg << "degenerate global reference frame: eigenvalues (" << l[0] << ", " << l[1] << ", " << l[2]
        << "), gaps (" << l[0] - l[1] << ", " << l[1] - l[2] << ")";
    throw DegenerateError(msg.str());
  }

  out.projected_centers = align(ps.centers, out.grf.frame);
  HilbertOrder h = hilbert_order(out.projected_centers, bits);
  out.order = std::move(h.order);
  out.codes = std::move(h.codes);
  out.patch_set = std::move(ps);
  out.lrfs = std::move(lrfs);
  return out;
}

}  // namespace rimamba
