#pragma once

#include "depthforge/parallel.hpp"
#include "depthforge/types.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace depthforge {

enum class PrimitiveKind { Sphere, Ellipsoid, MeshFile };

std::string to_string(PrimitiveKind kind);
PrimitiveKind primitive_from_string(const std::string& name);

/// Camera orbit around `center`: azimuth sweeps `revolutions` turns while the
/// elevation oscillates sinusoidally between the two limits. World is z-up.
struct OrbitSpec {
  Vec3 center = Vec3::Zero();
  double radius = 150.0;            ///< mm
  double elevation_min_deg = 20.0;
  double elevation_max_deg = 60.0;
  double elevation_cycles = 3.0;    ///< oscillations over the whole sequence
  double revolutions = 1.0;
  int n_frames = 900;
  double fps = 30.0;

  void validate() const;
};

struct SceneSpec {
  PrimitiveKind primitive = PrimitiveKind::Sphere;
  Vec3 semi_axes = Vec3::Constant(50.0);  ///< mm; a sphere uses semi_axes.x()
  std::filesystem::path mesh_path;         ///< MeshFile only
  int slices = 64;                         ///< azimuthal segments
  int stacks = 32;                         ///< polar segments
  OrbitSpec orbit;
  CameraIntrinsics intrinsics;
  std::uint64_t seed = 42;
  int points_per_frame = 40;
  int skip_frames = 0;  ///< early frames withheld from observation sampling

  void validate() const;

  /// Sphere of radius 50 mm.
  static SceneSpec sphere_preset();
  /// Liver-sized ellipsoid, semi-axes (70, 50, 35) mm: 140 mm longest extent.
  static SceneSpec liver_preset();
  static SceneSpec preset(const std::string& name);
};

struct CorruptionSpec {
  double sigma_ray = 0.0;         ///< mm, along the viewing ray
  double sigma_lat = 0.0;         ///< mm, per lateral axis
  double outlier_fraction = 0.0;  ///< in [0, 1)
  double global_scale = 1.0;      ///< applied about the centroid
  std::uint64_t seed = 0;

  void validate() const;
};

/// UV tessellation of the sphere/ellipsoid centred at the origin, or the mesh
/// read from `mesh_path`.
TriangleMesh make_primitive(const SceneSpec& spec);

/// Outward unit normal of the analytic primitive at `p` (face normal for
/// mesh files).
using SurfaceNormalFn = std::function<Vec3(const Vec3& p, std::uint32_t triangle)>;
SurfaceNormalFn surface_normal_fn(const SceneSpec& spec, const TriangleMesh& mesh);

/// Look-at orbit with frame ids 0 .. n_frames-1. Camera axes are
/// x right, y down, z forward.
Trajectory orbit_trajectory(const SceneSpec& spec);

/// Per frame, casts `points_per_frame` rays through uniformly drawn image
/// positions and keeps the first hits. Each frame draws from its own
/// (seed, frame id) substream. Frames with id < skip_frames are skipped.
PointCloud sample_visible_points(const TriangleMesh& mesh, const Trajectory& traj, const CameraIntrinsics& intr,
                                 int points_per_frame, std::uint64_t seed, const SurfaceNormalFn& normal_fn = {},
                                 int skip_frames = 0, Exec exec = Exec::Parallel);

struct CorruptionResult {
  PointCloud cloud;
  SimilarityTransform scale_transform;  ///< clean frame -> corrupted frame
  std::vector<std::size_t> outliers;    ///< indices replaced by outliers
};

/// Anisotropic ray/lateral noise, uniform outliers in the 1.5x bounding box,
/// then global scaling about the centroid. Normals and provenance are kept.
CorruptionResult corrupt(const PointCloud& cloud, const Trajectory& traj, const CorruptionSpec& spec);

/// Adds isotropic Gaussian noise to every camera centre with 3D RMS `sigma`
/// (per-axis sigma / sqrt(3)); rotations are unchanged.
Trajectory perturb_trajectory(const Trajectory& traj, double sigma, std::uint64_t seed);

}  // namespace depthforge
