#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "crlm/volgrid/grid.hpp"

namespace crlm::testing {

// Scratch directory unique to the running test binary.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("crlm_test_" + name);
  std::filesystem::create_directories(dir);
  return dir;
}

inline Volume3D random_volume(Index3 dims, std::uint64_t seed, double lo = 0.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  Volume3D v(Geometry{dims, {1, 1, 1}, {0, 0, 0}});
  for (double& x : v.buffer()) x = u(rng);
  return v;
}

inline Mask3D random_mask(Index3 dims, std::uint64_t seed, double density) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution b(density);
  Mask3D m(Geometry{dims, {1, 1, 1}, {0, 0, 0}});
  for (auto& x : m.buffer()) x = b(rng) ? 1 : 0;
  return m;
}

inline Mask3D sphere_mask(Index3 dims, Vec3 center, double radius, Vec3 spacing = {1, 1, 1}) {
  Mask3D m(Geometry{dims, spacing, {0, 0, 0}});
  for (std::int64_t z = 0; z < dims[2]; ++z)
    for (std::int64_t y = 0; y < dims[1]; ++y)
      for (std::int64_t x = 0; x < dims[0]; ++x) {
        const double dx = (static_cast<double>(x) - center[0]) * spacing[0];
        const double dy = (static_cast<double>(y) - center[1]) * spacing[1];
        const double dz = (static_cast<double>(z) - center[2]) * spacing[2];
        m(x, y, z) = dx * dx + dy * dy + dz * dz <= radius * radius ? 1 : 0;
      }
  return m;
}

// Bright sphere on a darker background with additive Gaussian noise.
inline Volume3D noisy_sphere_volume(Index3 dims, Vec3 center, double radius, double inside, double outside,
                                    double noise_sd, std::uint64_t seed) {
  const Mask3D m = sphere_mask(dims, center, radius);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, noise_sd);
  Volume3D v(m.geometry());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (m[i] ? inside : outside) + (noise_sd > 0 ? g(rng) : 0.0);
  return v;
}

inline double dice_of(const Mask3D& a, const Mask3D& b) {
  double inter = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i] != 0;
    nb += b[i] != 0;
    inter += (a[i] != 0) && (b[i] != 0);
  }
  return na + nb == 0 ? 1.0 : 2 * inter / (na + nb);
}

}  // namespace crlm::testing
