#include "depthforge/filters.hpp"

#include "depthforge/error.hpp"
#include "depthforge/spatial_index.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

namespace depthforge {

void RadiusFilterParams::validate() const {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ParameterError("radius filter: radius must be positive");
  if (min_neighbors < 1) throw ParameterError("radius filter: min_neighbors must be at least 1");
}

void VoxelFilterParams::validate() const {
  if (!(voxel_size > 0.0) || !std::isfinite(voxel_size)) throw ParameterError("voxel filter: voxel_size must be positive");
}

FilterDefaults default_filter_params(const PointCloud& cloud) {
  const SpatialIndex index(cloud.points);
  FilterDefaults d;
  d.median_spacing = median_nearest_neighbor_distance(index);
  if (!(d.median_spacing > 0.0)) {
    throw PreconditionError("median nearest-neighbour spacing is zero; cannot derive filter defaults");
  }
  d.radius.radius = 3.0 * d.median_spacing;
  d.radius.min_neighbors = 5;
  d.voxel.voxel_size = 2.0 * d.median_spacing;
  return d;
}

PointCloud radius_outlier_removal(const PointCloud& cloud, const RadiusFilterParams& params, Exec exec) {
  params.validate();
  const SpatialIndex index(cloud.points);
  std::vector<std::uint8_t> keep(cloud.size(), 0);
  // The query point itself is always within the radius, hence the +1.
  const auto needed = static_cast<std::size_t>(params.min_neighbors) + 1;
  parallel_for(exec, static_cast<std::int64_t>(cloud.size()), [&](std::int64_t i) {
    keep[i] = index.radius_count(cloud.points[i], params.radius, needed) >= needed ? 1 : 0;
  });
  std::vector<std::size_t> kept;
  kept.reserve(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (keep[i]) kept.push_back(i);
  }
  return cloud.select(kept);
}

PointCloud voxel_downsample(const PointCloud& cloud, const VoxelFilterParams& params) {
  params.validate();
  PointCloud out;
  if (cloud.empty()) return out;

  const Vec3 origin = bounding_box(cloud.points).min;
  using Key = std::array<std::int64_t, 3>;
  std::vector<Key> keys(cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int a = 0; a < 3; ++a) {
      keys[i][a] = static_cast<std::int64_t>(std::floor((cloud.points[i][a] - origin[a]) / params.voxel_size));
    }
  }
  std::vector<std::size_t> order(cloud.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

  bool any_unreliable = false;
  std::vector<std::uint8_t> reliable;
  for (std::size_t s = 0; s < order.size();) {
    std::size_t e = s;
    Vec3 sum = Vec3::Zero();
    Vec3 nsum = Vec3::Zero();
    while (e < order.size() && keys[order[e]] == keys[order[s]]) {
      sum += cloud.points[order[e]];
      if (cloud.has_normals()) nsum += cloud.normals[order[e]];
      ++e;
    }
    const std::size_t first = order[s];  // lowest index: stable sort keeps input order
    out.points.push_back(sum / static_cast<double>(e - s));
    if (cloud.has_source_frame()) out.source_frame.push_back(cloud.source_frame[first]);
    std::uint8_t ok = cloud.normal_reliable.empty() ? 1 : cloud.normal_reliable[first];
    if (cloud.has_normals()) {
      const double len = nsum.norm();
      if (len < 1e-6) {
        out.normals.push_back(cloud.normals[first]);
        ok = 0;
      } else {
        out.normals.push_back(nsum / len);
      }
    }
    any_unreliable = any_unreliable || ok == 0;
    reliable.push_back(ok);
    s = e;
  }
  if (any_unreliable || !cloud.normal_reliable.empty()) out.normal_reliable = std::move(reliable);
  return out;
}

}  // namespace depthforge
