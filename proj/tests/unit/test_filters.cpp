#include "depthforge/error.hpp"
#include "depthforge/filters.hpp"
#include "depthforge/spatial_index.hpp"

#include "support.hpp"

#include <doctest.h>

#include <set>
#include <tuple>

using namespace depthforge;
using namespace testsupport;

TEST_CASE("isolated point is removed") {
  PointCloud c;
  c.points = {Vec3(1, 2, 3)};
  CHECK(radius_outlier_removal(c, {5.0, 1}).empty());
}

TEST_CASE("tight pair supports each other") {
  PointCloud c;
  c.points = {Vec3(0, 0, 0), Vec3(0.5, 0, 0)};
  CHECK(radius_outlier_removal(c, {1.0, 1}).size() == 2);
  CHECK_THROWS_AS(radius_outlier_removal(c, {1.0, 0}), ParameterError);
  CHECK_THROWS_AS(radius_outlier_removal(c, {0.0, 1}), ParameterError);
}

TEST_CASE("cluster survives, distant outlier is removed") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud c;
  for (int i = 0; i < 10; ++i) c.points.emplace_back(u(rng), u(rng), u(rng));
  c.points.emplace_back(100, 0, 0);
  const PointCloud out = radius_outlier_removal(c, {5.0, 3});
  REQUIRE(out.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) CHECK(out.points[i] == c.points[i]);
}

TEST_CASE("radius filter matches the O(n^2) oracle, serial and parallel") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    PointCloud c;
    c.points = random_points(400 + 30 * seed, 50.0, seed);
    for (std::size_t i = 0; i < c.size(); ++i) c.source_frame.push_back(static_cast<std::int64_t>(i % 7));
    const RadiusFilterParams p{4.0 + static_cast<double>(seed % 3), static_cast<int>(1 + seed % 4)};
    const auto expected = brute_radius_filter(c.points, p.radius, p.min_neighbors);
    for (Exec exec : {Exec::Serial, Exec::Parallel}) {
      const PointCloud out = radius_outlier_removal(c, p, exec);
      REQUIRE(out.size() == expected.size());
      for (std::size_t k = 0; k < expected.size(); ++k) {
        CHECK(out.points[k] == c.points[expected[k]]);
        CHECK(out.source_frame[k] == c.source_frame[expected[k]]);
      }
    }
  }
}

TEST_CASE("survivors satisfy the predicate in the original cloud") {
  PointCloud c;
  c.points = random_points(600, 40.0, 21);
  const RadiusFilterParams p{3.5, 3};
  const PointCloud out = radius_outlier_removal(c, p);
  const SpatialIndex index(c.points);
  for (const auto& q : out.points) CHECK(index.radius_query(q, p.radius).size() >= 4);
}

TEST_CASE("voxel centroid of two points") {
  PointCloud c;
  c.points = {Vec3(0, 0, 0), Vec3(0.4, 0, 0)};
  const PointCloud out = voxel_downsample(c, {1.0});
  REQUIRE(out.size() == 1);
  CHECK((out.points[0] - Vec3(0.2, 0, 0)).norm() < 1e-15);
  CHECK_THROWS_AS(voxel_downsample(c, {0.0}), ParameterError);
}

TEST_CASE("well separated points are a permutation of the input") {
  PointCloud c;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) c.points.emplace_back(2.5 * j, 2.5 * i, 0.0);
  std::mt19937_64 rng(3);
  std::shuffle(c.points.begin(), c.points.end(), rng);
  const PointCloud out = voxel_downsample(c, {1.0});
  REQUIRE(out.size() == c.size());
  auto key = [](const Vec3& p) { return std::make_tuple(p.x(), p.y(), p.z()); };
  std::vector<std::tuple<double, double, double>> a, b;
  for (const auto& p : c.points) a.push_back(key(p));
  for (const auto& p : out.points) b.push_back(key(p));
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  CHECK(a == b);
}

TEST_CASE("voxel filter matches the hash-bin oracle exactly") {
  PointCloud c;
  c.points = random_points(10000, 100.0, 77);
  std::mt19937_64 rng(78);
  for (std::size_t i = 0; i < c.size(); ++i) {
    c.normals.push_back(random_unit(rng));
    c.source_frame.push_back(static_cast<std::int64_t>(i));
  }
  const double voxel = 5.0;
  const auto bins = brute_voxel_bins(c.points, voxel);
  const PointCloud out = voxel_downsample(c, {voxel});
  REQUIRE(out.size() == bins.size());
  std::size_t k = 0;
  for (const auto& [key, members] : bins) {
    Vec3 sum = Vec3::Zero(), nsum = Vec3::Zero();
    for (auto i : members) {
      sum += c.points[i];
      nsum += c.normals[i];
    }
    CHECK(out.points[k] == sum / static_cast<double>(members.size()));
    CHECK(out.normals[k] == nsum / nsum.norm());
    CHECK(out.source_frame[k] == static_cast<std::int64_t>(members.front()));
    ++k;
  }
}

TEST_CASE("voxel output properties") {
  PointCloud c;
  c.points = random_points(3000, 30.0, 5);
  const double voxel = 2.0;
  const PointCloud out = voxel_downsample(c, {voxel});
  CHECK(out.size() <= c.size());
  const Vec3 lo = bounding_box(c.points).min;
  std::set<std::array<long long, 3>> seen;
  for (const auto& p : out.points) {
    std::array<long long, 3> key;
    for (int a = 0; a < 3; ++a) {
      const double rel = (p[a] - lo[a]) / voxel;
      key[a] = static_cast<long long>(std::floor(rel));
      CHECK(p[a] >= lo[a] + key[a] * voxel - 1e-12);
      CHECK(p[a] <= lo[a] + (key[a] + 1) * voxel + 1e-12);
    }
    CHECK(seen.insert(key).second);
  }
}

TEST_CASE("cancelling normals keep the first member's normal and are flagged") {
  PointCloud c;
  c.points = {Vec3(0, 0, 0), Vec3(0.1, 0, 0), Vec3(5, 5, 5)};
  c.normals = {Vec3(0, 0, 1), Vec3(0, 0, -1), Vec3(1, 0, 0)};
  const PointCloud out = voxel_downsample(c, {1.0});
  REQUIRE(out.size() == 2);
  CHECK(out.normals[0] == Vec3(0, 0, 1));
  REQUIRE(out.normal_reliable.size() == 2);
  CHECK(out.normal_reliable[0] == 0);
  CHECK(out.normal_reliable[1] == 1);
}

TEST_CASE("translation invariance of voxel binning") {
  PointCloud c;
  c.points = random_points(2000, 20.0, 15);
  PointCloud moved = c;
  for (auto& p : moved.points) p += Vec3(1000.0, -250.0, 37.5);
  const PointCloud a = voxel_downsample(c, {1.5});
  const PointCloud b = voxel_downsample(moved, {1.5});
  CHECK(a.size() == b.size());
}

TEST_CASE("scale-free defaults") {
  PointCloud c;
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) c.points.emplace_back(0.5 * i, 0.5 * j, 0.0);
  const FilterDefaults d = default_filter_params(c);
  CHECK(d.median_spacing == doctest::Approx(0.5));
  CHECK(d.radius.radius == doctest::Approx(1.5));
  CHECK(d.radius.min_neighbors == 5);
  CHECK(d.voxel.voxel_size == doctest::Approx(1.0));
  PointCloud same;
  same.points.assign(5, Vec3(1, 1, 1));
  CHECK_THROWS_AS(default_filter_params(same), PreconditionError);
}
