#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "rimamba/cloud_io.hpp"

namespace rimamba {

/// G patches of k center-relative neighbors each, stored flat (patch-major).
struct PatchSet {
  std::size_t k = 0;
  std::vector<std::size_t> center_indices;  // G indices into the cloud
  std::vector<Vec3> centers;                // G
  std::vector<Vec3> points;                 // G*k, neighbor - center
  std::vector<std::size_t> source_indices;  // G*k

  std::size_t num_patches() const { return centers.size(); }
  std::span<const Vec3> patch(std::size_t i) const { return {points.data() + i * k, k}; }
  std::span<const std::size_t> sources(std::size_t i) const { return {source_indices.data() + i * k, k}; }
};

/// Farthest point sampling from index 0. Each step takes the unchosen point
/// with the largest squared distance to the chosen set, smallest index on ties.
std::vector<std::size_t> fps(std::span<const Vec3> points, std::size_t g);
inline std::vector<std::size_t> fps(const PointCloud& cloud, std::size_t g) { return fps(cloud.points, g); }

/// k nearest neighbors (center included) per center, ordered by
/// (squared distance, index).
PatchSet knn_group(std::span<const Vec3> points, std::span<const std::size_t> center_indices, std::size_t k);
inline PatchSet knn_group(const PointCloud& cloud, std::span<const std::size_t> center_indices, std::size_t k) {
  return knn_group(cloud.points, center_indices, k);
}

}  // namespace rimamba
