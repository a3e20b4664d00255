// Serial reference kernels against their OpenMP counterparts.

#include "depthforge/filters.hpp"
#include "depthforge/mls.hpp"
#include "depthforge/poisson.hpp"

#include <benchmark/benchmark.h>

#include <random>

using namespace depthforge;

namespace {

PointCloud noisy_sphere(std::size_t n, double sigma) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = Vec3(nd(rng), nd(rng), nd(rng)).normalized();
    c.points.push_back(50.0 * d + sigma * Vec3(nd(rng), nd(rng), nd(rng)));
    c.normals.push_back(d);
  }
  return c;
}

VectorField bump_field(int n) {
  GridSpec g;
  g.dims = {n, n, n};
  VectorField v(g);
  const Vec3 c = Vec3::Constant(0.5 * (n - 1));
  const double r = 0.35 * n;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Vec3 x = g.node_position(i, j, k);
        const double s = 1.0 - (x - c).squaredNorm() / (r * r);
        if (s > 0.0) v.values[g.index(i, j, k)] = -8.0 * s * s * s * (x - c) / (r * r);
      }
  return v;
}

Exec exec_of(const benchmark::State& st) { return st.range(0) ? Exec::Parallel : Exec::Serial; }

void BM_Laplacian(benchmark::State& st) {
  GridSpec g;
  g.dims = {64, 64, 64};
  std::vector<double> x(g.node_count(), 1.0), out(g.node_count());
  for (auto _ : st) {
    if (st.range(0)) {
      apply_laplacian(g, x, out);
    } else {
      serial::apply_laplacian(g, x, out);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

void BM_Solve(benchmark::State& st) {
  const VectorField v = bump_field(48);
  for (auto _ : st) {
    ScalarField chi = st.range(0) ? solve_indicator(v) : serial::solve_indicator(v);
    benchmark::DoNotOptimize(chi.values.data());
  }
}

void BM_Mls(benchmark::State& st) {
  const PointCloud c = noisy_sphere(5000, 1.0);
  MlsParams p;
  p.k = 20;
  p.kernel.bandwidth = 6.0;
  for (auto _ : st) benchmark::DoNotOptimize(mls_project(c, p, exec_of(st)).cloud.points.data());
}

void BM_RadiusFilter(benchmark::State& st) {
  const PointCloud c = noisy_sphere(20000, 1.0);
  for (auto _ : st) benchmark::DoNotOptimize(radius_outlier_removal(c, {3.0, 5}, exec_of(st)).points.data());
}

void BM_MarchingCubes(benchmark::State& st) {
  GridSpec g;
  g.dims = {72, 72, 72};
  ScalarField f(g);
  for (int k = 0; k < 72; ++k)
    for (int j = 0; j < 72; ++j)
      for (int i = 0; i < 72; ++i) f.at(i, j, k) = 25.0 - (g.node_position(i, j, k) - Vec3::Constant(35.5)).norm();
  for (auto _ : st) benchmark::DoNotOptimize(extract_isosurface(f, 0.0, exec_of(st)).triangles.data());
}

}  // namespace

// Argument 0 runs the serial path, 1 the parallel one.
BENCHMARK(BM_Laplacian)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Solve)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Mls)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RadiusFilter)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MarchingCubes)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
