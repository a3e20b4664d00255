#include "depthforge/depth.hpp"
#include "depthforge/error.hpp"
#include "depthforge/mesh_query.hpp"
#include "depthforge/synth.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <optional>

using namespace depthforge;
using namespace testsupport;

namespace {

std::optional<double> ray_sphere(const Vec3& o, const Vec3& d, const Vec3& c, double r) {
  const Vec3 oc = o - c;
  const double b = oc.dot(d);
  const double disc = b * b - (oc.squaredNorm() - r * r);
  if (disc < 0.0) return std::nullopt;
  const double t = -b - std::sqrt(disc);
  if (t <= 0.0) return std::nullopt;
  return t;
}

CameraIntrinsics small_intrinsics() {
  CameraIntrinsics k;
  k.width = 320;
  k.height = 240;
  k.fx = k.fy = 300.0;
  k.cx = 159.5;
  k.cy = 119.5;
  return k;
}

}  // namespace

TEST_CASE("sphere depth matches analytic ray intersection") {
  SceneSpec spec = SceneSpec::sphere_preset();
  spec.slices = 128;
  spec.stacks = 64;
  const TriangleMesh mesh = make_primitive(spec);
  const CameraIntrinsics k = small_intrinsics();
  const Trajectory traj = orbit_trajectory(spec);
  for (std::size_t f : {std::size_t{0}, std::size_t{137}, std::size_t{600}}) {
    const CameraPose& pose = traj.poses[f];
    const DepthMap map = rasterize_depth(mesh, k, pose);
    std::size_t covered = 0, good = 0;
    for (int v = 0; v < k.height; ++v) {
      for (int u = 0; u < k.width; ++u) {
        const double d = map.at(u, v);
        if (!(d > 0.0)) continue;
        ++covered;
        const auto t = ray_sphere(pose.translation, pose.rotation * k.pixel_ray(u, v), Vec3::Zero(), 50.0);
        if (t && std::abs(*t - d) <= 0.5) ++good;
      }
    }
    CHECK(covered == map.covered());
    CHECK(covered > 1000);
    CHECK(static_cast<double>(good) >= 0.99 * static_cast<double>(covered));
  }
}

TEST_CASE("serial and parallel rasterization agree") {
  const TriangleMesh mesh = make_primitive(SceneSpec::liver_preset());
  const Trajectory traj = orbit_trajectory(SceneSpec::liver_preset());
  const CameraIntrinsics k = small_intrinsics();
  const DepthMap a = rasterize_depth(mesh, k, traj.poses[10], Exec::Serial);
  const DepthMap b = rasterize_depth(mesh, k, traj.poses[10], Exec::Parallel);
  CHECK(a.depth == b.depth);
}

TEST_CASE("fronto-parallel plane has range depth") {
  const TriangleMesh plane = plane_mesh(100.0, 50.0, 2);
  CameraIntrinsics k = small_intrinsics();
  CameraPose pose;  // at origin looking along +z
  const DepthMap map = rasterize_depth(plane, k, pose);
  CHECK(map.covered() == static_cast<std::size_t>(k.width * k.height));
  const double centre = map.at(160, 120);
  const Vec3 ray = k.pixel_ray(160, 120);
  CHECK(centre == doctest::Approx(50.0 / ray.z()).epsilon(1e-12));
  const Vec3 corner = k.pixel_ray(0, 0);
  CHECK(map.at(0, 0) == doctest::Approx(50.0 / corner.z()).epsilon(1e-12));
}

TEST_CASE("geometry behind the camera is clipped") {
  const TriangleMesh plane = plane_mesh(100.0, -50.0, 2);
  const DepthMap map = rasterize_depth(plane, small_intrinsics(), CameraPose{});
  CHECK(map.covered() == 0);
}

TEST_CASE("PGM and raw output") {
  const TriangleMesh plane = plane_mesh(100.0, 50.0, 2);
  CameraIntrinsics k = small_intrinsics();
  const DepthMap map = rasterize_depth(plane, k, CameraPose{});
  const auto dir = scratch_dir("depth_out");
  write_depth_pgm(dir / "d.pgm", map);
  write_depth_raw(dir / "d.raw", map);
  std::ifstream in(dir / "d.pgm", std::ios::binary);
  std::string magic;
  int w = 0, h = 0, maxv = 0;
  in >> magic >> w >> h >> maxv;
  in.get();
  CHECK(magic == "P5");
  CHECK(w == 320);
  CHECK(h == 240);
  CHECK(maxv == 65535);
  std::vector<unsigned char> px(static_cast<std::size_t>(w) * h * 2);
  in.read(reinterpret_cast<char*>(px.data()), static_cast<std::streamsize>(px.size()));
  const std::size_t centre = (120 * 320 + 160) * 2;
  const int value = (px[centre] << 8) | px[centre + 1];
  CHECK(value == static_cast<int>(std::lround(map.at(160, 120) / kPgmMillimetresPerUnit)));
  CHECK(std::filesystem::file_size(dir / "d.raw") == static_cast<std::uintmax_t>(w) * h * 4);
}

TEST_CASE("invalid pose is rejected") {
  CameraPose bad;
  bad.rotation = Quat(2, 0, 0, 0);
  CHECK_THROWS_AS(rasterize_depth(plane_mesh(1, 1, 1), small_intrinsics(), bad), ParameterError);
}

TEST_CASE("nearest triangle wins and centre pixel reads the plane depth") {
  CameraIntrinsics k;  // defaults: principal point on a pixel centre
  TriangleMesh m;
  m.vertices = {Vec3(-50, -50, 100), Vec3(50, -50, 100), Vec3(0, 50, 100), Vec3(-20, -20, 50), Vec3(20, -20, 50),
                Vec3(0, 20, 50)};
  m.triangles = {{0, 1, 2}, {3, 4, 5}};
  const DepthMap map = rasterize_depth(m, k, CameraPose{});
  CHECK(map.at(512, 384) == doctest::Approx(50.0).epsilon(1e-14));
  m.triangles = {{0, 1, 2}};
  CHECK(rasterize_depth(m, k, CameraPose{}).at(512, 384) == doctest::Approx(100.0).epsilon(1e-14));
}

TEST_CASE("no covered pixel is closer than the mesh") {
  const SceneSpec spec = SceneSpec::liver_preset();
  const TriangleMesh mesh = make_primitive(spec);
  const Trajectory traj = orbit_trajectory(spec);
  const CameraPose& pose = traj.poses[321];
  const MeshBvh bvh(mesh);
  const double nearest = std::sqrt(bvh.closest_point(pose.translation).distance_sq);
  const DepthMap map = rasterize_depth(mesh, small_intrinsics(), pose);
  for (double d : map.depth)
    if (d > 0.0) CHECK(d >= nearest - 1e-9);
}
