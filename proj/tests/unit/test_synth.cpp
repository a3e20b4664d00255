#include "depthforge/error.hpp"
#include "depthforge/poisson.hpp"
#include "depthforge/rng.hpp"
#include "depthforge/synth.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <set>

using namespace depthforge;
using namespace testsupport;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using B = std::array<std::uint32_t, 4>;
  CHECK(Philox::block({0, 0, 0, 0}, {0, 0}) == B{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        B{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        B{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("Philox streams are reproducible and distinct") {
  Philox a(7, 1), b(7, 1), c(7, 2);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    CHECK(x == b.next_u64());
    CHECK(x != c.next_u64());
  }
  Philox u(1, 0);
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const double v = u.normal();
    s += v;
    s2 += v * v;
  }
  CHECK(std::abs(s / 20000) < 0.03);
  CHECK(std::abs(s2 / 20000 - 1.0) < 0.05);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
    CHECK(u.below(7) < 7u);
  }
}

TEST_CASE("primitives are closed and outward") {
  for (const char* name : {"sphere", "liver"}) {
    const SceneSpec spec = SceneSpec::preset(name);
    const TriangleMesh m = make_primitive(spec);
    CHECK(count_boundary_edges(m) == 0);
    CHECK(count_nonmanifold_edges(m) == 0);
    for (std::size_t t = 0; t < m.triangles.size(); ++t) {
      const Vec3 mid = (m.vertices[m.triangles[t][0]] + m.vertices[m.triangles[t][1]] + m.vertices[m.triangles[t][2]]) / 3.0;
      CHECK(m.face_normal(t).dot(mid) > 0.0);
    }
  }
  const TriangleMesh liver = make_primitive(SceneSpec::liver_preset());
  const Aabb box = bounding_box(liver.vertices);
  CHECK(box.extent().x() == doctest::Approx(140.0));
  CHECK_THROWS_AS(SceneSpec::preset("kidney"), ParameterError);
}

TEST_CASE("orbit looks at the centre within the elevation band") {
  const SceneSpec spec = SceneSpec::sphere_preset();
  const Trajectory t = orbit_trajectory(spec);
  CHECK(t.size() == 900);
  for (const auto& p : t.poses) {
    CHECK(p.translation.norm() == doctest::Approx(150.0));
    CHECK(p.forward().dot(-p.translation.normalized()) == doctest::Approx(1.0));
    const double elev = std::asin(p.translation.z() / 150.0) * 180.0 / M_PI;
    CHECK(elev >= 20.0 - 1e-9);
    CHECK(elev <= 60.0 + 1e-9);
    CHECK(std::abs(p.rotation.norm() - 1.0) < 1e-12);
  }
}

TEST_CASE("visible sampling puts points on the surface and records provenance") {
  SceneSpec spec = SceneSpec::sphere_preset();
  spec.orbit.n_frames = 60;
  const TriangleMesh mesh = make_primitive(spec);
  const Trajectory traj = orbit_trajectory(spec);
  const PointCloud a = sample_visible_points(mesh, traj, spec.intrinsics, 20, 3, surface_normal_fn(spec, mesh), 10);
  const PointCloud b = sample_visible_points(mesh, traj, spec.intrinsics, 20, 3, surface_normal_fn(spec, mesh), 10,
                                             Exec::Serial);
  CHECK(a.points == b.points);
  CHECK(a.size() > 150);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.points[i].norm() == doctest::Approx(50.0).epsilon(0.01));
    CHECK(a.source_frame[i] >= 10);
    CHECK(a.normals[i].dot(a.points[i].normalized()) > 0.99);
    const CameraPose* pose = traj.find(a.source_frame[i]);
    REQUIRE(pose != nullptr);
    // Analytic normals can face slightly away at facet-level grazing hits.
    CHECK(a.normals[i].dot((pose->translation - a.points[i]).normalized()) > -0.05);
  }
}

TEST_CASE("zero corruption is the identity") {
  SceneSpec spec = SceneSpec::sphere_preset();
  spec.orbit.n_frames = 30;
  const TriangleMesh mesh = make_primitive(spec);
  const Trajectory traj = orbit_trajectory(spec);
  const PointCloud clean = sample_visible_points(mesh, traj, spec.intrinsics, 20, 1);
  const CorruptionResult r = corrupt(clean, traj, CorruptionSpec{});
  CHECK(r.cloud.points == clean.points);
  CHECK(r.outliers.empty());
  CHECK(r.scale_transform.scale == 1.0);
}

TEST_CASE("corruption statistics") {
  SceneSpec spec = SceneSpec::sphere_preset();
  spec.orbit.n_frames = 200;
  const TriangleMesh mesh = make_primitive(spec);
  const Trajectory traj = orbit_trajectory(spec);
  const PointCloud clean = sample_visible_points(mesh, traj, spec.intrinsics, 40, 1);

  CorruptionSpec noise;
  noise.sigma_ray = 2.0;
  noise.seed = 5;
  const CorruptionResult r = corrupt(clean, traj, noise);
  double along = 0.0, lateral = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const Vec3 ray = (clean.points[i] - traj.find(clean.source_frame[i])->translation).normalized();
    const Vec3 d = r.cloud.points[i] - clean.points[i];
    along += d.dot(ray) * d.dot(ray);
    lateral += (d - d.dot(ray) * ray).squaredNorm();
  }
  CHECK(std::sqrt(along / clean.size()) == doctest::Approx(2.0).epsilon(0.05));
  CHECK(lateral < 1e-18 * clean.size());
  CHECK(r.cloud.normals == clean.normals);

  CorruptionSpec out;
  out.outlier_fraction = 0.05;
  out.global_scale = 0.37;
  out.seed = 5;
  const CorruptionResult o = corrupt(clean, traj, out);
  CHECK(o.outliers.size() == static_cast<std::size_t>(std::lround(0.05 * clean.size())));
  CHECK(std::set<std::size_t>(o.outliers.begin(), o.outliers.end()).size() == o.outliers.size());
  CHECK(o.scale_transform.scale == 0.37);
  const std::set<std::size_t> outl(o.outliers.begin(), o.outliers.end());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (outl.count(i)) continue;
    CHECK((o.scale_transform.apply(clean.points[i]) - o.cloud.points[i]).norm() < 1e-12);
  }
  CorruptionSpec bad;
  bad.outlier_fraction = 1.0;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}

TEST_CASE("trajectory perturbation is per-pose with total sigma") {
  SceneSpec spec = SceneSpec::sphere_preset();
  const Trajectory t = orbit_trajectory(spec);
  const Trajectory p = perturb_trajectory(t, 1.0, 3);
  const Trajectory q = perturb_trajectory(t, 1.0, 3);
  double s = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(p.poses[i].translation == q.poses[i].translation);
    CHECK(p.poses[i].frame_id == t.poses[i].frame_id);
    s += (p.poses[i].translation - t.poses[i].translation).squaredNorm();
  }
  CHECK(std::sqrt(s / t.size()) == doctest::Approx(1.0).epsilon(0.08));
}

TEST_CASE("primitive names round trip") {
  for (auto k : {PrimitiveKind::Sphere, PrimitiveKind::Ellipsoid, PrimitiveKind::MeshFile})
    CHECK(primitive_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(primitive_from_string("torus"), ParameterError);
}
