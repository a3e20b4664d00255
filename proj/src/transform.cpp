#include "depthforge/transform.hpp"

#include <algorithm>
#include <cmath>

namespace depthforge {

SimilarityTransform compose(const SimilarityTransform& a, const SimilarityTransform& b) {
  SimilarityTransform out;
  out.scale = a.scale * b.scale;
  out.rotation = (a.rotation * b.rotation).normalized();
  out.translation = a.scale * (a.rotation * b.translation) + a.translation;
  return out;
}

SimilarityTransform inverse(const SimilarityTransform& t) {
  SimilarityTransform out;
  out.scale = 1.0 / t.scale;
  out.rotation = t.rotation.conjugate();
  out.translation = -(out.scale * (out.rotation * t.translation));
  return out;
}

PointCloud apply_transform(const SimilarityTransform& t, const PointCloud& cloud) {
  PointCloud out = cloud;
  for (auto& p : out.points) p = t.apply(p);
  for (auto& n : out.normals) n = t.rotate(n).normalized();
  return out;
}

TriangleMesh apply_transform(const SimilarityTransform& t, const TriangleMesh& mesh) {
  TriangleMesh out = mesh;
  for (auto& v : out.vertices) v = t.apply(v);
  return out;
}

Trajectory apply_transform(const SimilarityTransform& t, const Trajectory& traj) {
  Trajectory out = traj;
  for (auto& pose : out.poses) {
    pose.rotation = (t.rotation * pose.rotation).normalized();
    pose.translation = t.apply(pose.translation);
  }
  return out;
}

double rotation_angle_between(const Quat& a, const Quat& b) {
  const Quat rel = a.normalized().conjugate() * b.normalized();
  return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
}

}  // namespace depthforge
