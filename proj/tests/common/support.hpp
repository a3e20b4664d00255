#pragma once

// Shared fixtures and brute-force oracles for the test binaries.

#include "depthforge/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <vector>

namespace testsupport {

using depthforge::PointCloud;
using depthforge::TriangleMesh;
using depthforge::Vec3;

inline std::vector<Vec3> random_points(std::size_t n, double extent, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, extent);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
  return pts;
}

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Vec3 v;
  do {
    v = Vec3(nd(rng), nd(rng), nd(rng));
  } while (v.norm() < 1e-9);
  return v.normalized();
}

/// Uniform samples on a sphere with exact outward normals; positions get
/// isotropic Gaussian noise of `sigma` per axis.
inline PointCloud sphere_cloud(std::size_t n, double r, double sigma, std::uint64_t seed,
                               const Vec3& center = Vec3::Zero()) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = random_unit(rng);
    Vec3 p = center + r * d;
    if (sigma > 0.0) p += sigma * Vec3(nd(rng), nd(rng), nd(rng));
    c.points.push_back(p);
    c.normals.push_back(d);
  }
  return c;
}

/// Brute-force radius query: indices with distance <= r, ascending.
inline std::vector<std::size_t> brute_radius(const std::vector<Vec3>& pts, const Vec3& c, double r) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (depthforge::squared_distance(pts[i], c) <= r * r) out.push_back(i);
  }
  return out;
}

/// Brute-force kNN: full sort by (distance, index).
inline std::vector<std::size_t> brute_knn(const std::vector<Vec3>& pts, const Vec3& c, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < pts.size(); ++i) d.emplace_back(depthforge::squared_distance(pts[i], c), i);
  std::sort(d.begin(), d.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, d.size()); ++i) out.push_back(d[i].second);
  return out;
}

/// O(n^2) radius-filter oracle.
inline std::vector<std::size_t> brute_radius_filter(const std::vector<Vec3>& pts, double r, int min_neighbors) {
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    int count = 0;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (j != i && depthforge::squared_distance(pts[i], pts[j]) <= r * r) ++count;
    }
    if (count >= min_neighbors) keep.push_back(i);
  }
  return keep;
}

/// Hash-by-voxel oracle: ordered map from voxel key to member indices.
inline std::map<std::array<long long, 3>, std::vector<std::size_t>> brute_voxel_bins(const std::vector<Vec3>& pts,
                                                                                    double voxel) {
  Vec3 lo = pts.front();
  for (const auto& p : pts) lo = lo.cwiseMin(p);
  std::map<std::array<long long, 3>, std::vector<std::size_t>> bins;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::array<long long, 3> key;
    for (int a = 0; a < 3; ++a) key[a] = static_cast<long long>(std::floor((pts[i][a] - lo[a]) / voxel));
    bins[key].push_back(i);
  }
  return bins;
}

/// Closed planar square [-half, half]^2 at height z, split into 2*n*n triangles.
inline TriangleMesh plane_mesh(double half, double z, int n = 4) {
  TriangleMesh m;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) m.vertices.emplace_back(-half + 2 * half * i / n, -half + 2 * half * j / n, z);
  auto id = [&](int i, int j) { return static_cast<std::uint32_t>(j * (n + 1) + i); };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      m.triangles.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
      m.triangles.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
    }
  return m;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("depthforge_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testsupport
