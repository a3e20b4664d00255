#pragma once

#include "depthforge/parallel.hpp"
#include "depthforge/types.hpp"

namespace depthforge {

struct RadiusFilterParams {
  double radius = 0.0;        ///< mm, > 0
  int min_neighbors = 5;      ///< >= 1, the point itself is not counted

  void validate() const;
};

struct VoxelFilterParams {
  double voxel_size = 0.0;    ///< mm, > 0

  void validate() const;
};

/// Scale-free defaults derived from the median nearest-neighbour spacing of
/// a cloud: radius 3x, min_neighbors 5, voxel 2x.
struct FilterDefaults {
  double median_spacing = 0.0;
  RadiusFilterParams radius;
  VoxelFilterParams voxel;
};
FilterDefaults default_filter_params(const PointCloud& cloud);

/// Keeps the points with at least `min_neighbors` other points within
/// `radius` (inclusive). Input order and attributes are preserved.
PointCloud radius_outlier_removal(const PointCloud& cloud, const RadiusFilterParams& params,
                                  Exec exec = Exec::Parallel);

/// Replaces the points of each occupied voxel (cubes anchored at the cloud's
/// minimum corner) by their centroid, ordered by (ix, iy, iz). Normals are
/// averaged and re-normalised; a voxel whose normals cancel keeps the normal
/// of its lowest-index member and is marked unreliable. Provenance comes from
/// the lowest-index member.
PointCloud voxel_downsample(const PointCloud& cloud, const VoxelFilterParams& params);

}  // namespace depthforge
