#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rimamba/cloud_io.hpp"
#include "rimamba/ssm.hpp"
#include "rimamba/weights_io.hpp"

namespace rimamba::testing {

/// Small network for unit tests; G and k match the default model.
inline ModelConfig small_config() {
  ModelConfig c;
  c.n_blocks = 2;
  c.dim = 32;
  c.n_patches = 64;
  c.neighbors = 32;
  c.input_points = 2048;
  c.state_dim = 4;
  c.conv_width = 4;
  c.film_bottleneck = 16;
  return c;
}

inline TokenizerDims small_dims() { return {16, 32, 64, 16}; }

inline PointCloud make_cloud(CloudKind kind, std::size_t n, std::uint64_t seed) {
  Prng rng(seed);
  PointCloud c = gen_cloud(kind, n, rng);
  c.id = std::string(to_string(kind)) + "_" + std::to_string(seed);
  return c;
}

/// Sphere sample closed under all 48 signed axis permutations: its
/// covariance is isotropic to rounding, so every frame built from it is
/// degenerate.
inline PointCloud symmetric_sphere(std::size_t base, std::uint64_t seed) {
  Prng rng(seed);
  PointCloud c;
  c.id = "sphere";
  const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  for (std::size_t i = 0; i < base; ++i) {
    Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    v = v * (1.0 / norm(v));
    for (const auto& p : perms)
      for (int s = 0; s < 8; ++s)
        c.points.push_back({(s & 1 ? -1 : 1) * v[p[0]], (s & 2 ? -1 : 1) * v[p[1]], (s & 4 ? -1 : 1) * v[p[2]]});
  }
  return c;
}

template <class A, class B>
double max_abs_diff(const A& a, const B& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return m;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("rimamba_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace rimamba::testing
