#include "rimamba/patcher.hpp"

#include <algorithm>
#include <limits>
#include <string>
#include <utility>

#include "rimamba/errors.hpp"

namespace rimamba {

std::vector<std::size_t> fps(std::span<const Vec3> points, std::size_t g) {
  const std::size_t n = points.size();
  if (g == 0) throw ArgumentError("fps: g must be at least 1");
  if (n < g) throw SizeError("fps: cloud has " + std::to_string(n) + " points, need at least " + std::to_string(g));

  std::vector<std::size_t> chosen;
  chosen.reserve(g);
  std::vector<double> min_d2(n, std::numeric_limits<double>::infinity());
  std::vector<char> taken(n, 0);

  std::size_t next = 0;
  for (std::size_t step = 0; step < g; ++step) {
    chosen.push_back(next);
    taken[next] = 1;
    const Vec3 c = points[next];
    std::size_t best = n;
    double best_d2 = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d2 = squared_norm(points[i] - c);
      if (d2 < min_d2[i]) min_d2[i] = d2;
      if (!taken[i] && min_d2[i] > best_d2) {
        best_d2 = min_d2[i];
        best = i;
      }
    }
    next = best;
  }
  return chosen;
}

PatchSet knn_group(std::span<const Vec3> points, std::span<const std::size_t> center_indices, std::size_t k) {
  const std::size_t n = points.size();
  if (k == 0) throw ArgumentError("knn_group: k must be at least 1");
  if (k > n) throw SizeError("knn_group: k=" + std::to_string(k) + " exceeds cloud size " + std::to_string(n));

  PatchSet ps;
  ps.k = k;
  ps.center_indices.assign(center_indices.begin(), center_indices.end());
  ps.centers.reserve(center_indices.size());
  ps.points.reserve(center_indices.size() * k);
  ps.source_indices.reserve(center_indices.size() * k);

  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t ci : center_indices) {
    if (ci >= n) throw ArgumentError("knn_group: center index " + std::to_string(ci) + " out of range");
    const Vec3 c = points[ci];
    for (std::size_t i = 0; i < n; ++i) dist[i] = {squared_norm(points[i] - c), i};
    // pair ordering is (distance, index): ties resolve to the smaller index
    std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
    ps.centers.push_back(c);
    for (std::size_t j = 0; j < k; ++j) {
      ps.source_indices.push_back(dist[j].second);
      ps.points.push_back(points[dist[j].second] - c);
    }
  }
  return ps;
}

}  // namespace rimamba
