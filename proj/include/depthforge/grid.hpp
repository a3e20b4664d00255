#pragma once

#include "depthforge/types.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace depthforge {

/// Regular grid of sample nodes. Node (i, j, k) sits at
/// origin + cell_size * (i, j, k); the outermost shell of nodes is the
/// zero-Dirichlet boundary of the Poisson solve.
struct GridSpec {
  Vec3 origin = Vec3::Zero();
  double cell_size = 1.0;
  std::array<int, 3> dims{8, 8, 8};

  static constexpr int kMinDim = 8;

  void validate() const;
  std::size_t node_count() const {
    return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(dims[2]);
  }
  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims[0]) * (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims[1]) * k);
  }
  Vec3 node_position(int i, int j, int k) const { return origin + cell_size * Vec3(i, j, k); }
  /// Continuous node coordinates of a world position.
  Vec3 to_grid(const Vec3& p) const { return (p - origin) / cell_size; }
  bool on_boundary(int i, int j, int k) const {
    return i == 0 || j == 0 || k == 0 || i == dims[0] - 1 || j == dims[1] - 1 || k == dims[2] - 1;
  }
};

/// Grid enclosing the bounding box of `points`, with `resolution` cells along
/// the longest axis and `padding` extra cells on every side.
GridSpec make_grid(std::span<const Vec3> points, int resolution, int padding);

struct ScalarField {
  GridSpec grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g, double fill = 0.0) : grid(g), values(g.node_count(), fill) {}

  double& at(int i, int j, int k) { return values[grid.index(i, j, k)]; }
  double at(int i, int j, int k) const { return values[grid.index(i, j, k)]; }

  /// Trilinear interpolation; throws ParameterError outside the grid.
  double sample(const Vec3& p) const;
  double min_value() const;
  double max_value() const;
};

/// Splatted normal field. `density` holds the scalar splat weight per node so
/// total mass can be checked against the number of points.
struct VectorField {
  GridSpec grid;
  std::vector<Vec3> values;
  std::vector<double> density;

  VectorField() = default;
  explicit VectorField(const GridSpec& g)
      : grid(g), values(g.node_count(), Vec3::Zero()), density(g.node_count(), 0.0) {}

  const Vec3& at(int i, int j, int k) const { return values[grid.index(i, j, k)]; }
};

}  // namespace depthforge
