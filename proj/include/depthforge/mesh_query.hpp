#pragma once

#include "depthforge/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace depthforge {

struct ClosestPoint {
  Vec3 point;
  double distance_sq = 0.0;
  std::uint32_t triangle = 0;
};

struct RayHit {
  double t = 0.0;  ///< distance along the (unit) ray direction
  Vec3 point;
  std::uint32_t triangle = 0;
};

/// Closest point to `p` on triangle (a, b, c).
Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c);

/// Bounding-volume hierarchy over the triangles of a mesh. Holds its own copy
/// of the geometry; queries are const and thread safe.
class MeshBvh {
 public:
  explicit MeshBvh(const TriangleMesh& mesh);

  const TriangleMesh& mesh() const noexcept { return mesh_; }

  /// Closest point on the surface. Requires a non-empty mesh.
  ClosestPoint closest_point(const Vec3& p) const;

  /// Nearest intersection with t in (t_min, t_max]; `dir` must be unit length.
  std::optional<RayHit> raycast(const Vec3& origin, const Vec3& dir, double t_min = 0.0,
                                double t_max = std::numeric_limits<double>::infinity()) const;

 private:
  struct Node {
    Aabb box;
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3>& centroids);

  TriangleMesh mesh_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace depthforge
