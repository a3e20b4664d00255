#pragma once

#include "depthforge/grid.hpp"
#include "depthforge/parallel.hpp"
#include "depthforge/types.hpp"

#include <array>
#include <span>
#include <vector>

namespace depthforge {

// ---------------------------------------------------------------------------
// Splatting

/// Cubic B-spline weights of a continuous grid coordinate `x` for the four
/// nodes floor(x)-1 .. floor(x)+2.
std::array<double, 4> bspline_weights(double x);

/// Distributes every oriented normal to its 4x4x4 node neighbourhood with
/// tensor-product cubic B-spline weights. Throws ParameterError naming the
/// point index when a neighbourhood leaves the grid.
VectorField splat_vector_field(const PointCloud& cloud, const GridSpec& grid, Exec exec = Exec::Parallel);

// ---------------------------------------------------------------------------
// Discrete operators on the node grid (boundary shell excluded)

/// Central-difference divergence at interior nodes; zero on the boundary.
std::vector<double> divergence(const VectorField& v, Exec exec = Exec::Parallel);

/// out = L x with the 7-point Laplacian (1/h^2 scaling) at interior nodes,
/// treating boundary nodes of x as zero; out is zero on the boundary.
void apply_laplacian(const GridSpec& grid, std::span<const double> x, std::span<double> out, Exec exec = Exec::Parallel);

struct SolveReport {
  int iterations = 0;
  double relative_residual = 0.0;  ///< ||L chi - div V|| / ||div V||
  int max_iterations = 0;
};

struct SolveOptions {
  double tolerance = 1e-8;
  int max_iterations = 0;  ///< 0 selects 10 * max(dims)
};

/// Conjugate-gradient solve of L chi = div V with chi = 0 on the boundary
/// shell. Throws ConvergenceError carrying the achieved residual when the
/// iteration cap is reached.
ScalarField solve_indicator(const VectorField& v, SolveReport* report = nullptr, const SolveOptions& opts = {},
                            Exec exec = Exec::Parallel);

/// Same problem, same stopping rule, as a direct loop-by-loop serial
/// implementation. Kept as the reference the parallel kernels are tested
/// and benchmarked against.
namespace serial {
void apply_laplacian(const GridSpec& grid, std::span<const double> x, std::span<double> out);
ScalarField solve_indicator(const VectorField& v, SolveReport* report = nullptr, const SolveOptions& opts = {});
}  // namespace serial

/// ||L chi - rhs||_2 / ||rhs||_2 (0 when rhs is zero and L chi is zero).
double relative_residual(const ScalarField& chi, std::span<const double> rhs);

// ---------------------------------------------------------------------------
// Isosurface

/// Mean of chi trilinearly interpolated at the point positions.
double select_isovalue(const ScalarField& chi, const PointCloud& cloud);

/// Marching cubes over every cell. Vertices are welded per grid edge;
/// triangles are wound so their normals point toward decreasing chi.
TriangleMesh extract_isosurface(const ScalarField& chi, double isovalue, Exec exec = Exec::Parallel);

/// Component containing the most triangles (vertices re-indexed, order
/// preserved). Ties go to the component with the lowest triangle index.
TriangleMesh largest_component(const TriangleMesh& mesh, std::size_t* component_count = nullptr);

/// Number of undirected edges used by exactly one triangle.
std::size_t count_boundary_edges(const TriangleMesh& mesh);
/// Number of undirected edges used by more than two triangles.
std::size_t count_nonmanifold_edges(const TriangleMesh& mesh);

// ---------------------------------------------------------------------------
// End to end

struct PoissonParams {
  int resolution = 64;  ///< cells along the longest bounding-box axis
  int padding = 4;      ///< cells of zero-Dirichlet margin, >= 4
  SolveOptions solve;

  void validate() const;
};

struct PoissonReport {
  GridSpec grid;
  SolveReport solve;
  double isovalue = 0.0;
  std::size_t component_count = 0;
  std::size_t raw_triangles = 0;
};

inline constexpr std::size_t kMinPoissonPoints = 100;

/// splat -> solve -> isovalue -> marching cubes -> largest component.
/// The indicator is extracted as -chi so that it is larger inside and the
/// output triangles face outward along the input normals.
TriangleMesh poisson_reconstruct(const PointCloud& cloud, const PoissonParams& params, PoissonReport* report = nullptr,
                                 Exec exec = Exec::Parallel);

/// Variant on a caller-supplied grid.
TriangleMesh poisson_reconstruct(const PointCloud& cloud, const GridSpec& grid, const SolveOptions& solve,
                                 PoissonReport* report = nullptr, Exec exec = Exec::Parallel);

}  // namespace depthforge
