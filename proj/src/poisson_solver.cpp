#include "depthforge/error.hpp"
#include "depthforge/poisson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace depthforge {
namespace {

struct Strides {
  std::size_t sy, sz;
};

Strides strides_of(const GridSpec& g) {
  return {static_cast<std::size_t>(g.dims[0]), static_cast<std::size_t>(g.dims[0]) * g.dims[1]};
}

/// 6 x - sum of the six neighbours; the SPD form of -h^2 L.
inline double neg_stencil(const double* x, std::size_t id, const Strides& s) {
  return 6.0 * x[id] - x[id - 1] - x[id + 1] - x[id - s.sy] - x[id + s.sy] - x[id - s.sz] - x[id + s.sz];
}

/// Runs body(k) over interior slabs and returns the slab-ordered sum of the
/// values it returns.
template <class Body>
double slab_reduce(Exec exec, const GridSpec& g, std::vector<double>& partial, Body&& body) {
  const int nz = g.dims[2];
  parallel_for(
      exec, nz - 2, [&](std::int64_t kk) { partial[static_cast<std::size_t>(kk)] = body(static_cast<int>(kk) + 1); }, 1);
  double total = 0.0;
  for (int kk = 0; kk < nz - 2; ++kk) total += partial[static_cast<std::size_t>(kk)];
  return total;
}

int iteration_cap(const GridSpec& g, const SolveOptions& opts) {
  if (opts.max_iterations > 0) return opts.max_iterations;
  return 10 * std::max({g.dims[0], g.dims[1], g.dims[2]});
}

void check_options(const SolveOptions& opts) {
  if (!(opts.tolerance > 0.0)) throw ParameterError("solver tolerance must be positive");
  if (opts.max_iterations < 0) throw ParameterError("solver iteration cap must be non-negative");
}

/// b = -h^2 div V on interior nodes.
std::vector<double> scaled_rhs(const VectorField& v, Exec exec) {
  std::vector<double> b = divergence(v, exec);
  const double h2 = v.grid.cell_size * v.grid.cell_size;
  for (double& x : b) x *= -h2;
  return b;
}

}  // namespace

std::vector<double> divergence(const VectorField& v, Exec exec) {
  const GridSpec& g = v.grid;
  g.validate();
  const Strides s = strides_of(g);
  std::vector<double> out(g.node_count(), 0.0);
  const double inv2h = 0.5 / g.cell_size;
  parallel_for(
      exec, g.dims[2] - 2,
      [&](std::int64_t kk) {
        const int k = static_cast<int>(kk) + 1;
        for (int j = 1; j + 1 < g.dims[1]; ++j) {
          std::size_t id = g.index(1, j, k);
          for (int i = 1; i + 1 < g.dims[0]; ++i, ++id) {
            out[id] = inv2h * ((v.values[id + 1].x() - v.values[id - 1].x()) +
                               (v.values[id + s.sy].y() - v.values[id - s.sy].y()) +
                               (v.values[id + s.sz].z() - v.values[id - s.sz].z()));
          }
        }
      },
      1);
  return out;
}

void apply_laplacian(const GridSpec& grid, std::span<const double> x, std::span<double> out, Exec exec) {
  grid.validate();
  if (x.size() != grid.node_count() || out.size() != grid.node_count()) {
    throw ParameterError("field size does not match the grid");
  }
  const Strides s = strides_of(grid);
  const double inv_h2 = -1.0 / (grid.cell_size * grid.cell_size);
  std::fill(out.begin(), out.end(), 0.0);
  // Boundary entries of x are read as zero.
  std::vector<double> xi(x.begin(), x.end());
  for (int k = 0; k < grid.dims[2]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[0]; ++i)
        if (grid.on_boundary(i, j, k)) xi[grid.index(i, j, k)] = 0.0;
  parallel_for(
      exec, grid.dims[2] - 2,
      [&](std::int64_t kk) {
        const int k = static_cast<int>(kk) + 1;
        for (int j = 1; j + 1 < grid.dims[1]; ++j) {
          std::size_t id = grid.index(1, j, k);
          for (int i = 1; i + 1 < grid.dims[0]; ++i, ++id) out[id] = inv_h2 * neg_stencil(xi.data(), id, s);
        }
      },
      1);
}

ScalarField solve_indicator(const VectorField& v, SolveReport* report, const SolveOptions& opts, Exec exec) {
  check_options(opts);
  const GridSpec& g = v.grid;
  g.validate();
  const Strides s = strides_of(g);
  const std::size_t n = g.node_count();
  const int cap = iteration_cap(g, opts);
  const std::vector<double> b = scaled_rhs(v, exec);
  std::vector<double> partial(static_cast<std::size_t>(g.dims[2]));

  auto for_rows = [&](int k, auto&& row_body) {
    for (int j = 1; j + 1 < g.dims[1]; ++j) row_body(g.index(1, j, k), g.index(g.dims[0] - 1, j, k));
  };

  const double b_norm = std::sqrt(slab_reduce(exec, g, partial, [&](int k) {
    double acc = 0.0;
    for_rows(k, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t id = lo; id < hi; ++id) acc += b[id] * b[id];
    });
    return acc;
  }));

  ScalarField chi(g, 0.0);
  SolveReport rep;
  rep.max_iterations = cap;
  if (b_norm == 0.0) {
    if (report) *report = rep;
    return chi;
  }

  std::vector<double>& x = chi.values;
  std::vector<double> r(b), p(n, 0.0), q(n, 0.0);

  // r = b - A x, returns r.r
  auto true_residual = [&]() {
    return slab_reduce(exec, g, partial, [&](int k) {
      double acc = 0.0;
      for_rows(k, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t id = lo; id < hi; ++id) {
          r[id] = b[id] - neg_stencil(x.data(), id, s);
          acc += r[id] * r[id];
        }
      });
      return acc;
    });
  };

  const double target = opts.tolerance * b_norm;
  double rr = true_residual();
  int it = 0;
  while (true) {
    // (Re)start from the true residual.
    p = r;
    while (it < cap && std::sqrt(rr) >= target) {
      const double pq = slab_reduce(exec, g, partial, [&](int k) {
        double acc = 0.0;
        for_rows(k, [&](std::size_t lo, std::size_t hi) {
          for (std::size_t id = lo; id < hi; ++id) {
            q[id] = neg_stencil(p.data(), id, s);
            acc += p[id] * q[id];
          }
        });
        return acc;
      });
      if (!(pq > 0.0)) break;
      const double alpha = rr / pq;
      const double rr_new = slab_reduce(exec, g, partial, [&](int k) {
        double acc = 0.0;
        for_rows(k, [&](std::size_t lo, std::size_t hi) {
          for (std::size_t id = lo; id < hi; ++id) {
            x[id] += alpha * p[id];
            r[id] -= alpha * q[id];
            acc += r[id] * r[id];
          }
        });
        return acc;
      });
      const double beta = rr_new / rr;
      rr = rr_new;
      ++it;
      parallel_for(
          exec, g.dims[2] - 2,
          [&](std::int64_t kk) {
            for_rows(static_cast<int>(kk) + 1, [&](std::size_t lo, std::size_t hi) {
              for (std::size_t id = lo; id < hi; ++id) p[id] = r[id] + beta * p[id];
            });
          },
          1);
    }
    const double true_rr = true_residual();
    rr = true_rr;
    if (std::sqrt(true_rr) < target || it >= cap) break;
  }

  rep.iterations = it;
  rep.relative_residual = std::sqrt(rr) / b_norm;
  if (report) *report = rep;
  if (!(rep.relative_residual < opts.tolerance)) {
    throw ConvergenceError(rep.relative_residual, it);
  }
  return chi;
}

double relative_residual(const ScalarField& chi, std::span<const double> rhs) {
  const GridSpec& g = chi.grid;
  std::vector<double> lx(g.node_count());
  apply_laplacian(g, chi.values, lx, Exec::Serial);
  double num = 0.0, den = 0.0;
  for (int k = 1; k + 1 < g.dims[2]; ++k)
    for (int j = 1; j + 1 < g.dims[1]; ++j)
      for (int i = 1; i + 1 < g.dims[0]; ++i) {
        const std::size_t id = g.index(i, j, k);
        num += (lx[id] - rhs[id]) * (lx[id] - rhs[id]);
        den += rhs[id] * rhs[id];
      }
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

namespace serial {

void apply_laplacian(const GridSpec& grid, std::span<const double> x, std::span<double> out) {
  grid.validate();
  if (x.size() != grid.node_count() || out.size() != grid.node_count()) {
    throw ParameterError("field size does not match the grid");
  }
  const double h2 = grid.cell_size * grid.cell_size;
  auto val = [&](int i, int j, int k) { return grid.on_boundary(i, j, k) ? 0.0 : x[grid.index(i, j, k)]; };
  for (int k = 0; k < grid.dims[2]; ++k)
    for (int j = 0; j < grid.dims[1]; ++j)
      for (int i = 0; i < grid.dims[0]; ++i) {
        const std::size_t id = grid.index(i, j, k);
        if (grid.on_boundary(i, j, k)) {
          out[id] = 0.0;
          continue;
        }
        out[id] = (val(i - 1, j, k) + val(i + 1, j, k) + val(i, j - 1, k) + val(i, j + 1, k) + val(i, j, k - 1) +
                   val(i, j, k + 1) - 6.0 * val(i, j, k)) /
                  h2;
      }
}

ScalarField solve_indicator(const VectorField& v, SolveReport* report, const SolveOptions& opts) {
  check_options(opts);
  const GridSpec& g = v.grid;
  g.validate();
  const std::size_t n = g.node_count();
  const int cap = iteration_cap(g, opts);
  const std::vector<double> div = divergence(v, Exec::Serial);
  // Solve (-L) x = -div with plain CG.
  std::vector<double> b(n);
  for (std::size_t i = 0; i < n; ++i) b[i] = -div[i];
  auto apply = [&](const std::vector<double>& in, std::vector<double>& out) {
    serial::apply_laplacian(g, in, out);
    for (double& o : out) o = -o;
  };
  auto dot = [](const std::vector<double>& a, const std::vector<double>& c) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * c[i];
    return acc;
  };

  ScalarField chi(g, 0.0);
  SolveReport rep;
  rep.max_iterations = cap;
  const double b_norm = std::sqrt(dot(b, b));
  if (b_norm == 0.0) {
    if (report) *report = rep;
    return chi;
  }
  std::vector<double>& x = chi.values;
  std::vector<double> r(n), p(n), q(n);
  auto residual = [&]() {
    apply(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
    return dot(r, r);
  };
  double rr = residual();
  const double target = opts.tolerance * b_norm;
  int it = 0;
  while (true) {
    p = r;
    while (it < cap && std::sqrt(rr) >= target) {
      apply(p, q);
      const double pq = dot(p, q);
      if (!(pq > 0.0)) break;
      const double alpha = rr / pq;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      const double rr_new = dot(r, r);
      const double beta = rr_new / rr;
      rr = rr_new;
      ++it;
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
    rr = residual();
    if (std::sqrt(rr) < target || it >= cap) break;
  }
  rep.iterations = it;
  rep.relative_residual = std::sqrt(rr) / b_norm;
  if (report) *report = rep;
  if (!(rep.relative_residual < opts.tolerance)) {
    throw ConvergenceError(rep.relative_residual, it);
  }
  return chi;
}

}  // namespace serial
}  // namespace depthforge
