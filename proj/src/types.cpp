#include "depthforge/types.hpp"

#include "depthforge/error.hpp"

#include <algorithm>
#include <string>

namespace depthforge {

void PointCloud::validate() const {
  const std::size_t n = points.size();
  if (!normals.empty() && normals.size() != n) {
    throw ParameterError("point cloud has " + std::to_string(normals.size()) + " normals for " +
                         std::to_string(n) + " points");
  }
  if (!source_frame.empty() && source_frame.size() != n) {
    throw ParameterError("point cloud provenance count does not match point count");
  }
  if (!normal_reliable.empty() && normal_reliable.size() != n) {
    throw ParameterError("point cloud reliability mask count does not match point count");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!is_finite(points[i])) {
      throw ParameterError("point " + std::to_string(i) + " has a non-finite coordinate");
    }
  }
  for (std::size_t i = 0; i < normals.size(); ++i) {
    if (!is_finite(normals[i]) || std::abs(normals[i].norm() - 1.0) > 1e-6) {
      throw ParameterError("normal " + std::to_string(i) + " is not unit length");
    }
  }
  for (std::size_t i = 0; i < source_frame.size(); ++i) {
    if (source_frame[i] < 0) {
      throw ParameterError("point " + std::to_string(i) + " has a negative source frame");
    }
  }
}

void PointCloud::copy_point_to(std::size_t i, PointCloud& out) const {
  out.points.push_back(points[i]);
  if (has_normals()) out.normals.push_back(normals[i]);
  if (has_source_frame()) out.source_frame.push_back(source_frame[i]);
  if (!normal_reliable.empty()) out.normal_reliable.push_back(normal_reliable[i]);
}

PointCloud PointCloud::select(std::span<const std::size_t> indices) const {
  PointCloud out;
  out.points.reserve(indices.size());
  if (has_normals()) out.normals.reserve(indices.size());
  if (has_source_frame()) out.source_frame.reserve(indices.size());
  for (std::size_t i : indices) copy_point_to(i, out);
  return out;
}

void TriangleMesh::validate() const {
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    if (!is_finite(vertices[i])) {
      throw ParameterError("vertex " + std::to_string(i) + " has a non-finite coordinate");
    }
  }
  const auto nv = vertices.size();
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    const auto& tri = triangles[t];
    if (tri[0] >= nv || tri[1] >= nv || tri[2] >= nv) {
      throw ParameterError("triangle " + std::to_string(t) + " references a missing vertex");
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      throw ParameterError("triangle " + std::to_string(t) + " is degenerate");
    }
  }
}

Vec3 TriangleMesh::face_normal(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec3 n = (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]);
  const double len = n.norm();
  return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
}

double TriangleMesh::face_area(std::size_t t) const {
  const auto& tri = triangles[t];
  return 0.5 * (vertices[tri[1]] - vertices[tri[0]]).cross(vertices[tri[2]] - vertices[tri[0]]).norm();
}

void Trajectory::validate() const {
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const auto& p = poses[i];
    if (p.frame_id < 0) throw ParameterError("negative frame id in trajectory");
    if (i > 0 && p.frame_id <= poses[i - 1].frame_id) {
      throw ParameterError("trajectory frame ids are not strictly increasing at pose " + std::to_string(i));
    }
    if (std::abs(p.rotation.norm() - 1.0) > 1e-9) {
      throw ParameterError("pose " + std::to_string(p.frame_id) + " rotation is not a unit quaternion");
    }
    if (!is_finite(p.translation)) throw ParameterError("pose translation is not finite");
  }
}

const CameraPose* Trajectory::find(std::int64_t frame_id) const {
  auto it = std::lower_bound(poses.begin(), poses.end(), frame_id,
                             [](const CameraPose& p, std::int64_t f) { return p.frame_id < f; });
  if (it != poses.end() && it->frame_id == frame_id) return &*it;
  return nullptr;
}

const CameraPose& Trajectory::nearest_frame(std::int64_t frame_id) const {
  if (poses.empty()) throw PreconditionError("empty trajectory");
  auto it = std::lower_bound(poses.begin(), poses.end(), frame_id,
                             [](const CameraPose& p, std::int64_t f) { return p.frame_id < f; });
  if (it == poses.end()) return poses.back();
  if (it == poses.begin()) return *it;
  auto prev = std::prev(it);
  return (frame_id - prev->frame_id) <= (it->frame_id - frame_id) ? *prev : *it;
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ParameterError("focal lengths must be positive");
  if (width <= 0 || height <= 0) throw ParameterError("image size must be positive");
  if (!(cx > 0.0 && cx < width) || !(cy > 0.0 && cy < height)) {
    throw ParameterError("principal point must lie inside the image");
  }
}

Vec3 CameraIntrinsics::pixel_ray(double u, double v) const {
  return Vec3((u - cx) / fx, (v - cy) / fy, 1.0).normalized();
}

void SimilarityTransform::validate() const {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw ParameterError("similarity scale must be positive");
  if (std::abs(rotation.norm() - 1.0) > 1e-9) throw ParameterError("similarity rotation is not a unit quaternion");
  if (!is_finite(translation)) throw ParameterError("similarity translation is not finite");
}

Eigen::Matrix4d SimilarityTransform::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = scale * rotation_matrix();
  m.topRightCorner<3, 1>() = translation;
  return m;
}

Aabb bounding_box(std::span<const Vec3> points) {
  Aabb box;
  for (const auto& p : points) box.extend(p);
  return box;
}

Vec3 centroid(std::span<const Vec3> points) {
  Vec3 sum = Vec3::Zero();
  for (const auto& p : points) sum += p;
  return points.empty() ? sum : Vec3(sum / static_cast<double>(points.size()));
}

}  // namespace depthforge
