#include "depthforge/poisson.hpp"

#include "depthforge/error.hpp"

#include <cmath>
#include <string>

namespace depthforge {

std::array<double, 4> bspline_weights(double x) {
  const double t = x - std::floor(x);
  const double t2 = t * t, t3 = t2 * t;
  const double s = 1.0 - t;
  return {s * s * s / 6.0, (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0, (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0, t3 / 6.0};
}

VectorField splat_vector_field(const PointCloud& cloud, const GridSpec& grid, Exec exec) {
  grid.validate();
  VectorField field(grid);
  if (cloud.empty()) return field;
  if (!cloud.has_normals()) throw PreconditionError("splatting needs a cloud with oriented normals");

  struct Stencil {
    std::array<int, 3> base;
    std::array<std::array<double, 4>, 3> w;
  };
  std::vector<Stencil> stencils(cloud.size());
  std::vector<std::uint8_t> outside(cloud.size(), 0);
  parallel_for(exec, static_cast<std::int64_t>(cloud.size()), [&](std::int64_t i) {
    const Vec3 x = grid.to_grid(cloud.points[i]);
    Stencil& st = stencils[i];
    for (int a = 0; a < 3; ++a) {
      const double f = std::floor(x[a]);
      if (!std::isfinite(f) || f - 1 < 0 || f + 2 > grid.dims[a] - 1) {
        outside[i] = 1;
        return;
      }
      st.base[a] = static_cast<int>(f) - 1;
      st.w[a] = bspline_weights(x[a]);
    }
  });
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (outside[i]) {
      throw ParameterError("point " + std::to_string(i) + " lies outside the splatting grid");
    }
  }
  // Accumulate in point order so sums are independent of scheduling.
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Stencil& st = stencils[i];
    const Vec3& n = cloud.normals[i];
    for (int c = 0; c < 4; ++c) {
      for (int b = 0; b < 4; ++b) {
        const double wbc = st.w[1][b] * st.w[2][c];
        std::size_t id = grid.index(st.base[0], st.base[1] + b, st.base[2] + c);
        for (int a = 0; a < 4; ++a, ++id) {
          const double w = st.w[0][a] * wbc;
          field.values[id] += w * n;
          field.density[id] += w;
        }
      }
    }
  }
  return field;
}

double select_isovalue(const ScalarField& chi, const PointCloud& cloud) {
  if (cloud.empty()) throw PreconditionError("isovalue selection needs at least one point");
  double acc = 0.0;
  for (const auto& p : cloud.points) acc += chi.sample(p);
  return acc / static_cast<double>(cloud.size());
}

void PoissonParams::validate() const {
  if (resolution < 8 || resolution > 192) throw ParameterError("Poisson resolution must be in [8, 192]");
  if (padding < 4) throw ParameterError("Poisson padding must be at least 4 cells");
  if (!(solve.tolerance > 0.0)) throw ParameterError("solver tolerance must be positive");
}

TriangleMesh poisson_reconstruct(const PointCloud& cloud, const PoissonParams& params, PoissonReport* report,
                                 Exec exec) {
  params.validate();
  if (cloud.size() < kMinPoissonPoints) {
    throw PreconditionError("Poisson reconstruction needs at least " + std::to_string(kMinPoissonPoints) +
                            " points, got " + std::to_string(cloud.size()));
  }
  const GridSpec grid = make_grid(cloud.points, params.resolution, params.padding);
  return poisson_reconstruct(cloud, grid, params.solve, report, exec);
}

TriangleMesh poisson_reconstruct(const PointCloud& cloud, const GridSpec& grid, const SolveOptions& solve,
                                 PoissonReport* report, Exec exec) {
  if (cloud.size() < kMinPoissonPoints) {
    throw PreconditionError("Poisson reconstruction needs at least " + std::to_string(kMinPoissonPoints) +
                            " points, got " + std::to_string(cloud.size()));
  }
  if (!cloud.has_normals()) throw PreconditionError("Poisson reconstruction needs oriented normals");
  PoissonReport rep;
  rep.grid = grid;
  const VectorField v = splat_vector_field(cloud, grid, exec);
  ScalarField chi = solve_indicator(v, &rep.solve, solve, exec);
  // With outward normals chi grows outward; negate so the solid is the
  // high side and marching cubes winds triangles outward.
  for (double& x : chi.values) x = -x;
  rep.isovalue = select_isovalue(chi, cloud);
  const TriangleMesh raw = extract_isosurface(chi, rep.isovalue, exec);
  rep.raw_triangles = raw.triangles.size();
  TriangleMesh mesh = largest_component(raw, &rep.component_count);
  rep.isovalue = -rep.isovalue;
  if (report) *report = rep;
  return mesh;
}

}  // namespace depthforge
