#include "depthforge/grid.hpp"

#include "depthforge/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace depthforge {

void GridSpec::validate() const {
  if (!(cell_size > 0.0) || !std::isfinite(cell_size)) throw ParameterError("grid cell size must be positive");
  for (int d : dims) {
    if (d < kMinDim) throw ParameterError("grid dimensions must be at least " + std::to_string(kMinDim));
  }
  if (!is_finite(origin)) throw ParameterError("grid origin is not finite");
}

GridSpec make_grid(std::span<const Vec3> points, int resolution, int padding) {
  if (points.empty()) throw PreconditionError("cannot size a grid for an empty point set");
  if (resolution < 1) throw ParameterError("grid resolution must be positive");
  if (padding < 4) throw ParameterError("grid padding must be at least 4 cells");
  const Aabb box = bounding_box(points);
  const Vec3 ext = box.extent();
  double longest = ext.maxCoeff();
  if (!(longest > 0.0)) longest = 1.0;
  GridSpec g;
  g.cell_size = longest / resolution;
  for (int a = 0; a < 3; ++a) {
    const int cells = std::max(1, static_cast<int>(std::ceil(ext[a] / g.cell_size - 1e-9)));
    g.dims[a] = std::max(GridSpec::kMinDim, cells + 2 * padding + 1);
    // Centre the box in the grid so the padding is symmetric.
    const double span = (g.dims[a] - 1) * g.cell_size;
    g.origin[a] = box.center()[a] - 0.5 * span;
  }
  return g;
}

double ScalarField::sample(const Vec3& p) const {
  const Vec3 x = grid.to_grid(p);
  for (int a = 0; a < 3; ++a) {
    if (!(x[a] >= 0.0 && x[a] <= grid.dims[a] - 1)) throw ParameterError("sample position lies outside the grid");
  }
  int i0[3];
  double f[3];
  for (int a = 0; a < 3; ++a) {
    i0[a] = std::min(static_cast<int>(std::floor(x[a])), grid.dims[a] - 2);
    f[a] = x[a] - i0[a];
  }
  double acc = 0.0;
  for (int dk = 0; dk < 2; ++dk) {
    for (int dj = 0; dj < 2; ++dj) {
      for (int di = 0; di < 2; ++di) {
        const double w = (di ? f[0] : 1.0 - f[0]) * (dj ? f[1] : 1.0 - f[1]) * (dk ? f[2] : 1.0 - f[2]);
        acc += w * at(i0[0] + di, i0[1] + dj, i0[2] + dk);
      }
    }
  }
  return acc;
}

double ScalarField::min_value() const { return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end()); }
double ScalarField::max_value() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }

}  // namespace depthforge
