#pragma once

#include "depthforge/types.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace depthforge {

/// Balanced k-d tree over 3D positions.
///
/// Immutable after construction; all queries are const and safe to call
/// concurrently. Radius queries are boundary inclusive (distance <= radius)
/// and k-nearest ties are broken by ascending point index, so results match
/// a brute-force scan exactly.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  explicit SpatialIndex(std::span<const Vec3> points);

  std::size_t size() const noexcept { return points_.size(); }
  bool empty() const noexcept { return points_.empty(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }

  /// Indices with ||p - center|| <= radius, in ascending index order.
  std::vector<std::size_t> radius_query(const Vec3& center, double radius) const;

  /// Number of points within `radius`, stopping early once `limit` is reached.
  std::size_t radius_count(const Vec3& center, double radius, std::size_t limit) const;

  /// The k nearest points ordered by (distance, index). Returns every point
  /// when the index holds fewer than k.
  std::vector<std::size_t> knn_query(const Vec3& center, std::size_t k) const;

 private:
  struct Node {
    Aabb box;
    std::uint32_t begin = 0;  // range into order_
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

/// Median over all points of the distance to the nearest other point.
/// Requires at least two points.
double median_nearest_neighbor_distance(const SpatialIndex& index);

}  // namespace depthforge
