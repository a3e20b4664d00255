#pragma once

#include "depthforge/types.hpp"

namespace depthforge {

/// a ∘ b : x -> a(b(x)).
SimilarityTransform compose(const SimilarityTransform& a, const SimilarityTransform& b);
SimilarityTransform inverse(const SimilarityTransform& t);

/// Positions map as scale*R*p + t. Normals are rotated only and re-normalised.
PointCloud apply_transform(const SimilarityTransform& t, const PointCloud& cloud);
TriangleMesh apply_transform(const SimilarityTransform& t, const TriangleMesh& mesh);
/// Rotations are left-composed with R; camera centres map like positions.
Trajectory apply_transform(const SimilarityTransform& t, const Trajectory& traj);

/// Angle in radians of the relative rotation between two quaternions.
double rotation_angle_between(const Quat& a, const Quat& b);

}  // namespace depthforge
