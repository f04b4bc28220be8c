#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rimamba/geom3.hpp"
#include "rimamba/prng.hpp"

namespace rimamba {

using Rgb = std::array<float, 3>;

struct PointCloud {
  std::vector<Vec3> points;
  std::optional<std::vector<Rgb>> colors;
  std::string id;

  std::size_t size() const { return points.size(); }

  /// Throws ArgumentError unless points are non-empty and finite and colors
  /// (when present) match in length.
  void validate() const;
};

enum class CloudFormat { xyz_ascii, pcb1_binary };

/// Reads a cloud exactly as stored. Binary coordinates are f32 widened to
/// double; ASCII coordinates are parsed at double precision.
PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format);

/// Picks the format from the file's leading bytes ("PCB1" magic or text).
PointCloud load_cloud(const std::filesystem::path& path);

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format);

/// In-memory codecs behind load_cloud/save_cloud.
std::vector<std::uint8_t> encode_pcb1(const PointCloud& cloud);
PointCloud decode_pcb1(std::string_view bytes);
std::string encode_xyz(const PointCloud& cloud);
PointCloud decode_xyz(std::string_view text);

/// Centers on the centroid and scales so the largest point norm is 1.
PointCloud normalize_cloud(const PointCloud& cloud);

enum class CloudKind { ellipsoid, box_surface, two_lobes, helix };

std::string_view to_string(CloudKind kind);
CloudKind parse_cloud_kind(std::string_view name);

/// Synthetic test shapes. Coordinates are rounded to f32 so clouds survive
/// a PCB1 round trip bit for bit.
///   ellipsoid    solid, semi-axes (3, 2, 1)
///   box_surface  surface of a 3 x 2 x 1 box
///   two_lobes    two anisotropic Gaussian blobs of unequal mass
///   helix        tapered thick helix
PointCloud gen_cloud(CloudKind kind, std::size_t n, Prng& rng);

/// Applies p -> p * rotation to every point.
PointCloud rotate_cloud(const PointCloud& cloud, const Mat3& rotation);

}  // namespace rimamba
