#include "depthforge/error.hpp"
#include "depthforge/poisson.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace depthforge;
using namespace testsupport;

namespace {

GridSpec cube_grid(int n, double h = 1.0) {
  GridSpec g;
  g.dims = {n, n, n};
  g.cell_size = h;
  return g;
}

// phi = (1 - r^2/R^2)^4 inside radius R, zero outside.
double bump(const Vec3& x, const Vec3& c, double R) {
  const double s = 1.0 - (x - c).squaredNorm() / (R * R);
  return s > 0.0 ? s * s * s * s : 0.0;
}
Vec3 bump_gradient(const Vec3& x, const Vec3& c, double R) {
  const double s = 1.0 - (x - c).squaredNorm() / (R * R);
  return s > 0.0 ? Vec3(-8.0 * s * s * s * (x - c) / (R * R)) : Vec3::Zero();
}

double mesh_area(const TriangleMesh& m) {
  double a = 0.0;
  for (const auto& t : m.triangles) {
    a += 0.5 * (m.vertices[t[1]] - m.vertices[t[0]]).cross(m.vertices[t[2]] - m.vertices[t[0]]).norm();
  }
  return a;
}

}  // namespace

TEST_CASE("B-spline weights form a partition of unity") {
  for (double x : {0.0, 0.25, 3.5, 7.999, 12.0}) {
    const auto w = bspline_weights(x);
    double s = 0.0;
    for (double v : w) {
      CHECK(v >= 0.0);
      s += v;
    }
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
  }
  const auto w = bspline_weights(5.0);
  CHECK(w[0] == doctest::Approx(1.0 / 6.0));
  CHECK(w[1] == doctest::Approx(4.0 / 6.0));
  CHECK(w[2] == doctest::Approx(1.0 / 6.0));
  CHECK(w[3] == doctest::Approx(0.0));
}

TEST_CASE("splatting conserves mass and normal sum") {
  const GridSpec g = make_grid(std::vector<Vec3>{Vec3(-30, -30, -30), Vec3(30, 30, 30)}, 32, 4);
  const PointCloud c = sphere_cloud(500, 25.0, 0.0, 2);
  for (Exec exec : {Exec::Serial, Exec::Parallel}) {
    const VectorField v = splat_vector_field(c, g, exec);
    double mass = 0.0;
    Vec3 total = Vec3::Zero();
    for (std::size_t i = 0; i < v.values.size(); ++i) {
      mass += v.density[i];
      total += v.values[i];
    }
    Vec3 expected = Vec3::Zero();
    for (const auto& n : c.normals) expected += n;
    CHECK(mass == doctest::Approx(500.0).epsilon(1e-12));
    CHECK((total - expected).norm() < 1e-9);
  }
  PointCloud far = c;
  far.points[7] = Vec3(1000, 0, 0);
  CHECK_THROWS_WITH_AS(splat_vector_field(far, g), doctest::Contains("point 7"), ParameterError);
}

TEST_CASE("Laplacian of a quadratic is constant in the interior") {
  const GridSpec g = cube_grid(10, 0.5);
  std::vector<double> x(g.node_count()), out(g.node_count()), ref(g.node_count());
  for (int k = 0; k < 10; ++k)
    for (int j = 0; j < 10; ++j)
      for (int i = 0; i < 10; ++i) {
        const Vec3 p = g.node_position(i, j, k);
        x[g.index(i, j, k)] = g.on_boundary(i, j, k) ? 0.0 : p.squaredNorm();
      }
  apply_laplacian(g, x, out);
  serial::apply_laplacian(g, x, ref);
  for (int k = 2; k < 8; ++k)
    for (int j = 2; j < 8; ++j)
      for (int i = 2; i < 8; ++i) CHECK(out[g.index(i, j, k)] == doctest::Approx(6.0).epsilon(1e-12));
  for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == ref[i]);
  CHECK(out[g.index(0, 4, 4)] == 0.0);
}

TEST_CASE("manufactured solution is recovered") {
  const GridSpec g = cube_grid(40);
  const Vec3 c(19.5, 19.5, 19.5);
  const double R = 14.0;
  VectorField v(g);
  ScalarField phi(g);
  for (int k = 0; k < 40; ++k)
    for (int j = 0; j < 40; ++j)
      for (int i = 0; i < 40; ++i) {
        const Vec3 p = g.node_position(i, j, k);
        v.values[g.index(i, j, k)] = bump_gradient(p, c, R);
        phi.at(i, j, k) = bump(p, c, R);
      }
  SolveReport rep;
  const ScalarField chi = solve_indicator(v, &rep);
  CHECK(rep.relative_residual < 1e-8);
  CHECK(relative_residual(chi, divergence(v)) < 1e-8);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < chi.values.size(); ++i) {
    num += (chi.values[i] - phi.values[i]) * (chi.values[i] - phi.values[i]);
    den += phi.values[i] * phi.values[i];
  }
  CHECK(std::sqrt(num / den) < 0.05);

  SolveReport srep;
  const ScalarField s = serial::solve_indicator(v, &srep);
  CHECK(srep.iterations == rep.iterations);
  for (std::size_t i = 0; i < s.values.size(); ++i) CHECK(s.values[i] == doctest::Approx(chi.values[i]).epsilon(1e-9));
}

TEST_CASE("parallel solve is deterministic") {
  const GridSpec g = cube_grid(20);
  VectorField v(g);
  for (int k = 0; k < 20; ++k)
    for (int j = 0; j < 20; ++j)
      for (int i = 0; i < 20; ++i) v.values[g.index(i, j, k)] = bump_gradient(g.node_position(i, j, k), Vec3(9.5, 9.5, 9.5), 7.0);
  const ScalarField a = solve_indicator(v);
  const ScalarField b = solve_indicator(v);
  CHECK(a.values == b.values);
}

TEST_CASE("iteration cap raises ConvergenceError with the residual") {
  const GridSpec g = cube_grid(24);
  VectorField v(g);
  for (int k = 0; k < 24; ++k)
    for (int j = 0; j < 24; ++j)
      for (int i = 0; i < 24; ++i) v.values[g.index(i, j, k)] = bump_gradient(g.node_position(i, j, k), Vec3(11.5, 11.5, 11.5), 9.0);
  SolveOptions opts;
  opts.max_iterations = 2;
  try {
    solve_indicator(v, nullptr, opts);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.iterations() == 2);
    CHECK(e.residual() > 1e-8);
  }
}

TEST_CASE("zero field solves trivially") {
  const VectorField v(cube_grid(8));
  SolveReport rep;
  const ScalarField chi = solve_indicator(v, &rep);
  CHECK(rep.iterations == 0);
  CHECK(chi.max_value() == 0.0);
}

TEST_CASE("marching cubes on a sphere field is closed and outward") {
  const GridSpec g = cube_grid(32, 2.0);
  const Vec3 c(31, 31, 31);
  ScalarField f(g);
  for (int k = 0; k < 32; ++k)
    for (int j = 0; j < 32; ++j)
      for (int i = 0; i < 32; ++i) f.at(i, j, k) = 20.0 - (g.node_position(i, j, k) - c).norm();
  for (Exec exec : {Exec::Serial, Exec::Parallel}) {
    const TriangleMesh m = extract_isosurface(f, 0.0, exec);
    REQUIRE(!m.triangles.empty());
    CHECK(count_boundary_edges(m) == 0);
    CHECK(count_nonmanifold_edges(m) == 0);
    double worst = 0.0;
    for (const auto& p : m.vertices) worst = std::max(worst, std::abs((p - c).norm() - 20.0));
    CHECK(worst < 0.2);
    for (const auto& t : m.triangles) {
      const Vec3 n = (m.vertices[t[1]] - m.vertices[t[0]]).cross(m.vertices[t[2]] - m.vertices[t[0]]);
      const Vec3 mid = (m.vertices[t[0]] + m.vertices[t[1]] + m.vertices[t[2]]) / 3.0;
      CHECK(n.dot(mid - c) > 0.0);
    }
    CHECK(mesh_area(m) == doctest::Approx(4.0 * M_PI * 400.0).epsilon(0.02));
  }
}

TEST_CASE("marching cubes on random fields is watertight away from the border") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const GridSpec g = cube_grid(12);
    ScalarField f(g);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < 12; ++k)
      for (int j = 0; j < 12; ++j)
        for (int i = 0; i < 12; ++i) f.at(i, j, k) = g.on_boundary(i, j, k) ? -1.0 : u(rng);
    const TriangleMesh a = extract_isosurface(f, 0.0, Exec::Serial);
    const TriangleMesh b = extract_isosurface(f, 0.0, Exec::Parallel);
    CHECK(a.vertices == b.vertices);
    CHECK(a.triangles == b.triangles);
    CHECK(count_boundary_edges(a) == 0);
  }
}

TEST_CASE("largest component keeps the bigger sphere") {
  const GridSpec g = cube_grid(40);
  ScalarField f(g);
  for (int k = 0; k < 40; ++k)
    for (int j = 0; j < 40; ++j)
      for (int i = 0; i < 40; ++i) {
        const Vec3 p = g.node_position(i, j, k);
        f.at(i, j, k) = std::max(10.0 - (p - Vec3(13, 19.5, 19.5)).norm(), 4.0 - (p - Vec3(31, 19.5, 19.5)).norm());
      }
  const TriangleMesh all = extract_isosurface(f, 0.0);
  std::size_t count = 0;
  const TriangleMesh big = largest_component(all, &count);
  CHECK(count == 2);
  CHECK(big.triangles.size() < all.triangles.size());
  for (const auto& p : big.vertices) CHECK(p.x() < 24.0);
  CHECK(count_boundary_edges(big) == 0);
}

TEST_CASE("isovalue is the mean sampled indicator") {
  const GridSpec g = cube_grid(8);
  ScalarField f(g);
  for (int k = 0; k < 8; ++k)
    for (int j = 0; j < 8; ++j)
      for (int i = 0; i < 8; ++i) f.at(i, j, k) = i + 2.0 * j;
  PointCloud c;
  c.points = {Vec3(1.5, 1, 1), Vec3(2, 2.5, 3)};
  CHECK(select_isovalue(f, c) == doctest::Approx(0.5 * (1.5 + 2.0 + 2.0 + 5.0)));
}

TEST_CASE("end to end sphere reconstruction") {
  const PointCloud c = sphere_cloud(5000, 50.0, 0.0, 11);
  PoissonReport rep;
  const TriangleMesh m = poisson_reconstruct(c, PoissonParams{}, &rep);
  CHECK(count_boundary_edges(m) == 0);
  CHECK(count_nonmanifold_edges(m) == 0);
  CHECK(rep.solve.relative_residual < 1e-8);
  double s = 0.0;
  for (const auto& p : m.vertices) s += (p.norm() - 50.0) * (p.norm() - 50.0);
  CHECK(std::sqrt(s / static_cast<double>(m.vertices.size())) < 1.5);

  PointCloud tiny;
  tiny.points = random_points(50, 10.0, 1);
  tiny.normals.assign(50, Vec3::UnitZ());
  CHECK_THROWS_AS(poisson_reconstruct(tiny, PoissonParams{}), PreconditionError);
  PoissonParams bad;
  bad.resolution = 4;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
  bad.resolution = 64;
  bad.padding = 2;
  CHECK_THROWS_AS(bad.validate(), ParameterError);
}
