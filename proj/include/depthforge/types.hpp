#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace depthforge {

// All lengths are millimetres.
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
// Hamilton convention; Eigen stores coefficients as (x, y, z, w).
using Quat = Eigen::Quaterniond;

inline double squared_distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x() - b.x();
  const double dy = a.y() - b.y();
  const double dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

inline bool is_finite(const Vec3& v) { return std::isfinite(v.x()) && std::isfinite(v.y()) && std::isfinite(v.z()); }

/// Point samples with optional per-point normals and keyframe provenance.
///
/// Optional attributes are represented by empty vectors; when present they
/// have exactly one entry per point. `normal_reliable` marks normals whose
/// local neighbourhood was rank deficient (0 = unreliable); empty means all
/// normals are reliable.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
  std::vector<std::int64_t> source_frame;
  std::vector<std::uint8_t> normal_reliable;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  bool has_normals() const noexcept { return !normals.empty(); }
  bool has_source_frame() const noexcept { return !source_frame.empty(); }

  /// Throws ParameterError when an invariant is violated.
  void validate() const;

  /// Copies point `i` (with whatever attributes exist) onto the end of `out`.
  void copy_point_to(std::size_t i, PointCloud& out) const;
  /// Subset in the given index order.
  PointCloud select(std::span<const std::size_t> indices) const;
};

using Triangle = std::array<std::uint32_t, 3>;

struct TriangleMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;

  bool empty() const noexcept { return triangles.empty(); }
  void validate() const;

  Vec3 face_normal(std::size_t t) const;  ///< unit normal by right-hand winding
  double face_area(std::size_t t) const;
};

/// Camera-to-world pose. `translation` is the camera centre in world
/// coordinates. The camera looks along its local +z, x right, y down.
struct CameraPose {
  std::int64_t frame_id = 0;
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }
  Vec3 forward() const { return rotation * Vec3::UnitZ(); }
  Vec3 world_to_camera(const Vec3& p) const { return rotation.conjugate() * (p - translation); }
  Vec3 camera_to_world(const Vec3& p) const { return rotation * p + translation; }
};

struct Trajectory {
  std::vector<CameraPose> poses;

  std::size_t size() const noexcept { return poses.size(); }
  bool empty() const noexcept { return poses.empty(); }
  void validate() const;

  /// Pose with exactly this frame id, or nullptr.
  const CameraPose* find(std::int64_t frame_id) const;
  /// Pose whose frame id is closest to `frame_id` (ties go to the lower id).
  const CameraPose& nearest_frame(std::int64_t frame_id) const;
};

struct CameraIntrinsics {
  double fx = 700.0;
  double fy = 700.0;
  double cx = 512.0;
  double cy = 384.0;
  int width = 1024;
  int height = 768;

  void validate() const;
  /// Unit ray direction in camera coordinates through pixel (u, v).
  /// Integer pixel coordinates are pixel centres.
  Vec3 pixel_ray(double u, double v) const;
};

/// x -> scale * R * x + translation.
struct SimilarityTransform {
  double scale = 1.0;
  Quat rotation = Quat::Identity();
  Vec3 translation = Vec3::Zero();

  static SimilarityTransform identity() { return {}; }

  void validate() const;
  Vec3 apply(const Vec3& p) const { return scale * (rotation * p) + translation; }
  Vec3 rotate(const Vec3& v) const { return rotation * v; }
  Mat3 rotation_matrix() const { return rotation.toRotationMatrix(); }
  Eigen::Matrix4d matrix() const;
};

/// Axis-aligned bounding box of a non-empty point set.
struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  bool valid() const { return (min.array() <= max.array()).all(); }
  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
};

Aabb bounding_box(std::span<const Vec3> points);
Vec3 centroid(std::span<const Vec3> points);

}  // namespace depthforge
