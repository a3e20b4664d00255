#include "depthforge/synth.hpp"

#include "depthforge/error.hpp"
#include "depthforge/io.hpp"
#include "depthforge/mesh_query.hpp"
#include "depthforge/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace depthforge {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Substream ids; frame and point streams use the low range.
constexpr std::uint64_t kOutlierStream = 0x8000000000000000ull;
constexpr std::uint64_t kPoseStream = 0x4000000000000000ull;

}  // namespace

std::string to_string(PrimitiveKind kind) {
  switch (kind) {
    case PrimitiveKind::Sphere:
      return "sphere";
    case PrimitiveKind::Ellipsoid:
      return "ellipsoid";
    case PrimitiveKind::MeshFile:
      return "mesh-file";
  }
  return "sphere";
}

PrimitiveKind primitive_from_string(const std::string& name) {
  if (name == "sphere") return PrimitiveKind::Sphere;
  if (name == "ellipsoid") return PrimitiveKind::Ellipsoid;
  if (name == "mesh-file" || name == "mesh") return PrimitiveKind::MeshFile;
  throw ParameterError("unknown primitive '" + name + "'");
}

void OrbitSpec::validate() const {
  if (n_frames < 2) throw ParameterError("orbit needs at least 2 frames");
  if (!(radius > 0.0)) throw ParameterError("orbit radius must be positive");
  if (!(fps > 0.0)) throw ParameterError("frame rate must be positive");
  if (!(elevation_min_deg <= elevation_max_deg) || elevation_min_deg <= -89.0 || elevation_max_deg >= 89.0) {
    throw ParameterError("orbit elevations must satisfy -89 < min <= max < 89 degrees");
  }
  if (!is_finite(center)) throw ParameterError("orbit centre is not finite");
}

void SceneSpec::validate() const {
  orbit.validate();
  intrinsics.validate();
  if (primitive != PrimitiveKind::MeshFile && !(semi_axes.minCoeff() > 0.0)) {
    throw ParameterError("primitive sizes must be positive");
  }
  if (primitive == PrimitiveKind::MeshFile && mesh_path.empty()) throw ParameterError("mesh-file primitive needs a path");
  if (slices < 3 || stacks < 2) throw ParameterError("tessellation needs slices >= 3 and stacks >= 2");
  if (points_per_frame < 1) throw ParameterError("points per frame must be at least 1");
  if (skip_frames < 0) throw ParameterError("skip_frames must be non-negative");
}

SceneSpec SceneSpec::sphere_preset() {
  SceneSpec s;
  s.primitive = PrimitiveKind::Sphere;
  s.semi_axes = Vec3::Constant(50.0);
  s.orbit.radius = 150.0;
  return s;
}

SceneSpec SceneSpec::liver_preset() {
  SceneSpec s;
  s.primitive = PrimitiveKind::Ellipsoid;
  s.semi_axes = Vec3(70.0, 50.0, 35.0);
  s.orbit.radius = 220.0;
  return s;
}

SceneSpec SceneSpec::preset(const std::string& name) {
  if (name == "liver") return liver_preset();
  if (name == "sphere") return sphere_preset();
  throw ParameterError("unknown preset '" + name + "' (expected liver or sphere)");
}

void CorruptionSpec::validate() const {
  if (!(sigma_ray >= 0.0) || !(sigma_lat >= 0.0)) throw ParameterError("noise sigmas must be non-negative");
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) throw ParameterError("outlier fraction must be in [0, 1)");
  if (!(global_scale > 0.0) || !std::isfinite(global_scale)) throw ParameterError("global scale must be positive");
}

TriangleMesh make_primitive(const SceneSpec& spec) {
  if (spec.primitive == PrimitiveKind::MeshFile) {
    if (spec.mesh_path.empty()) throw ParameterError("mesh-file primitive needs a path");
    return io::read_ply_mesh(spec.mesh_path);
  }
  spec.validate();
  const Vec3 axes = spec.primitive == PrimitiveKind::Sphere ? Vec3::Constant(spec.semi_axes.x()) : spec.semi_axes;
  const int ns = spec.slices, nt = spec.stacks;
  TriangleMesh mesh;
  mesh.vertices.emplace_back(0.0, 0.0, axes.z());
  for (int t = 1; t < nt; ++t) {
    const double theta = std::numbers::pi * t / nt;
    for (int s = 0; s < ns; ++s) {
      const double phi = 2.0 * std::numbers::pi * s / ns;
      mesh.vertices.emplace_back(axes.x() * std::sin(theta) * std::cos(phi), axes.y() * std::sin(theta) * std::sin(phi),
                                 axes.z() * std::cos(theta));
    }
  }
  mesh.vertices.emplace_back(0.0, 0.0, -axes.z());
  const auto ring = [&](int t, int s) { return static_cast<std::uint32_t>(1 + (t - 1) * ns + (s % ns)); };
  const auto south = static_cast<std::uint32_t>(mesh.vertices.size() - 1);
  for (int s = 0; s < ns; ++s) mesh.triangles.push_back({0u, ring(1, s), ring(1, s + 1)});
  for (int t = 1; t + 1 < nt; ++t) {
    for (int s = 0; s < ns; ++s) {
      mesh.triangles.push_back({ring(t, s), ring(t + 1, s), ring(t + 1, s + 1)});
      mesh.triangles.push_back({ring(t, s), ring(t + 1, s + 1), ring(t, s + 1)});
    }
  }
  for (int s = 0; s < ns; ++s) mesh.triangles.push_back({ring(nt - 1, s), south, ring(nt - 1, s + 1)});
  return mesh;
}

SurfaceNormalFn surface_normal_fn(const SceneSpec& spec, const TriangleMesh& mesh) {
  if (spec.primitive == PrimitiveKind::MeshFile) {
    return [&mesh](const Vec3&, std::uint32_t t) { return mesh.face_normal(t); };
  }
  const Vec3 axes = spec.primitive == PrimitiveKind::Sphere ? Vec3::Constant(spec.semi_axes.x()) : spec.semi_axes;
  const Vec3 inv_sq = axes.cwiseProduct(axes).cwiseInverse();
  return [inv_sq](const Vec3& p, std::uint32_t) { return p.cwiseProduct(inv_sq).normalized(); };
}

Trajectory orbit_trajectory(const SceneSpec& spec) {
  const OrbitSpec& o = spec.orbit;
  o.validate();
  Trajectory traj;
  traj.poses.reserve(static_cast<std::size_t>(o.n_frames));
  const double mid = 0.5 * (o.elevation_min_deg + o.elevation_max_deg) * kDeg;
  const double amp = 0.5 * (o.elevation_max_deg - o.elevation_min_deg) * kDeg;
  for (int f = 0; f < o.n_frames; ++f) {
    const double s = static_cast<double>(f) / o.n_frames;
    const double azimuth = 2.0 * std::numbers::pi * o.revolutions * s;
    const double elevation = mid + amp * std::sin(2.0 * std::numbers::pi * o.elevation_cycles * s);
    const Vec3 dir(std::cos(elevation) * std::cos(azimuth), std::cos(elevation) * std::sin(azimuth),
                   std::sin(elevation));
    CameraPose pose;
    pose.frame_id = f;
    pose.translation = o.center + o.radius * dir;
    const Vec3 forward = -dir;
    const Vec3 right = forward.cross(Vec3::UnitZ()).normalized();
    const Vec3 down = forward.cross(right);
    Mat3 r;
    r.col(0) = right;
    r.col(1) = down;
    r.col(2) = forward;
    pose.rotation = Quat(r).normalized();
    traj.poses.push_back(pose);
  }
  return traj;
}

PointCloud sample_visible_points(const TriangleMesh& mesh, const Trajectory& traj, const CameraIntrinsics& intr,
                                 int points_per_frame, std::uint64_t seed, const SurfaceNormalFn& normal_fn,
                                 int skip_frames, Exec exec) {
  if (mesh.empty()) throw PreconditionError("cannot sample an empty mesh");
  if (traj.empty()) throw PreconditionError("cannot sample from an empty trajectory");
  if (points_per_frame < 1) throw ParameterError("points per frame must be at least 1");
  intr.validate();
  const MeshBvh bvh(mesh);
  std::vector<PointCloud> per_frame(traj.size());
  parallel_for(
      exec, static_cast<std::int64_t>(traj.size()),
      [&](std::int64_t f) {
        const CameraPose& pose = traj.poses[f];
        if (pose.frame_id < skip_frames) return;
        Philox rng(seed, static_cast<std::uint64_t>(pose.frame_id));
        PointCloud& out = per_frame[f];
        for (int k = 0; k < points_per_frame; ++k) {
          const double u = rng.uniform(-0.5, intr.width - 0.5);
          const double v = rng.uniform(-0.5, intr.height - 0.5);
          const Vec3 dir = (pose.rotation * intr.pixel_ray(u, v)).normalized();
          const auto hit = bvh.raycast(pose.translation, dir);
          if (!hit) continue;
          out.points.push_back(hit->point);
          Vec3 n = normal_fn ? normal_fn(hit->point, hit->triangle) : mesh.face_normal(hit->triangle);
          out.normals.push_back(n);
          out.source_frame.push_back(pose.frame_id);
        }
      },
      1);
  PointCloud cloud;
  for (const auto& pf : per_frame) {
    cloud.points.insert(cloud.points.end(), pf.points.begin(), pf.points.end());
    cloud.normals.insert(cloud.normals.end(), pf.normals.begin(), pf.normals.end());
    cloud.source_frame.insert(cloud.source_frame.end(), pf.source_frame.begin(), pf.source_frame.end());
  }
  if (cloud.empty()) throw PreconditionError("no camera ray hit the mesh");
  return cloud;
}

CorruptionResult corrupt(const PointCloud& cloud, const Trajectory& traj, const CorruptionSpec& spec) {
  spec.validate();
  if (!cloud.empty() && !cloud.has_source_frame()) throw PreconditionError("corruption needs per-point source frames");
  if (!cloud.empty() && traj.empty()) throw PreconditionError("corruption needs a trajectory");
  CorruptionResult result;
  PointCloud& out = result.cloud;
  out = cloud;
  const std::size_t n = cloud.size();

  if (spec.sigma_ray > 0.0 || spec.sigma_lat > 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      const CameraPose* pose = traj.find(cloud.source_frame[i]);
      if (!pose) pose = &traj.nearest_frame(cloud.source_frame[i]);
      Vec3 d = cloud.points[i] - pose->translation;
      if (!(d.norm() > 0.0)) d = pose->forward();
      d.normalize();
      int axis = 0;
      d.cwiseAbs().minCoeff(&axis);
      const Vec3 a = d.cross(Vec3::Unit(axis)).normalized();
      const Vec3 b = d.cross(a);
      Philox rng(spec.seed, i);
      const double e_ray = rng.normal(), e_a = rng.normal(), e_b = rng.normal();
      out.points[i] += spec.sigma_ray * e_ray * d + spec.sigma_lat * (e_a * a + e_b * b);
    }
  }

  const auto n_out = static_cast<std::size_t>(std::llround(spec.outlier_fraction * static_cast<double>(n)));
  if (n_out > 0) {
    const Aabb box = bounding_box(cloud.points);
    const Vec3 c = box.center();
    const Vec3 half = 0.75 * box.extent();
    Philox rng(spec.seed, kOutlierStream);
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t k = 0; k < n_out; ++k) std::swap(idx[k], idx[k + rng.below(n - k)]);
    result.outliers.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_out));
    std::sort(result.outliers.begin(), result.outliers.end());
    for (std::size_t i : result.outliers) {
      for (int a = 0; a < 3; ++a) out.points[i][a] = rng.uniform(c[a] - half[a], c[a] + half[a]);
    }
  }

  result.scale_transform = SimilarityTransform::identity();
  if (spec.global_scale != 1.0 && n > 0) {
    const Vec3 c = centroid(out.points);
    result.scale_transform.scale = spec.global_scale;
    result.scale_transform.translation = (1.0 - spec.global_scale) * c;
    for (auto& p : out.points) p = c + spec.global_scale * (p - c);
  }
  return result;
}

Trajectory perturb_trajectory(const Trajectory& traj, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw ParameterError("pose noise sigma must be non-negative");
  Trajectory out = traj;
  if (sigma == 0.0) return out;
  const double per_axis = sigma / std::sqrt(3.0);
  for (auto& pose : out.poses) {
    Philox rng(seed, kPoseStream + static_cast<std::uint64_t>(pose.frame_id));
    const double x = rng.normal(), y = rng.normal(), z = rng.normal();
    pose.translation += per_axis * Vec3(x, y, z);
  }
  return out;
}

}  // namespace depthforge
