// Acceptance suite: one line per criterion, non-zero exit if any fails.

#include "depthforge/depth.hpp"
#include "depthforge/eval.hpp"
#include "depthforge/filters.hpp"
#include "depthforge/mls.hpp"
#include "depthforge/pipeline.hpp"
#include "depthforge/poisson.hpp"
#include "depthforge/study.hpp"
#include "depthforge/synth.hpp"
#include "depthforge/transform.hpp"

#include "support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

using namespace depthforge;
using namespace testsupport;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double rms_radial(const std::vector<Vec3>& pts, const Vec3& c, double r) {
  double s = 0.0;
  for (const auto& p : pts) s += std::pow((p - c).norm() - r, 2);
  return std::sqrt(s / static_cast<double>(pts.size()));
}

// 1 ---------------------------------------------------------------------------
Outcome filters_match_oracles() {
  const auto t0 = Clock::now();
  int mismatches = 0;
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 100 + rng() % 901;
    PointCloud c;
    c.points = random_points(n, 40.0, 1000 + trial);
    const double radius = 2.0 + static_cast<double>(rng() % 400) / 100.0;
    const int min_nb = 1 + static_cast<int>(rng() % 5);
    const double voxel = 1.0 + static_cast<double>(rng() % 500) / 100.0;

    const PointCloud rf = radius_outlier_removal(c, {radius, min_nb});
    const auto keep = brute_radius_filter(c.points, radius, min_nb);
    bool ok = rf.size() == keep.size();
    for (std::size_t k = 0; ok && k < keep.size(); ++k) ok = rf.points[k] == c.points[keep[k]];

    const PointCloud vf = voxel_downsample(c, {voxel});
    const auto bins = brute_voxel_bins(c.points, voxel);
    ok = ok && vf.size() == bins.size();
    std::size_t k = 0;
    for (const auto& [key, members] : bins) {
      if (!ok) break;
      Vec3 s = Vec3::Zero();
      for (auto i : members) s += c.points[i];
      ok = vf.points[k++] == s / static_cast<double>(members.size());
    }
    if (!ok) ++mismatches;
  }
  const double t = seconds_since(t0);
  return {mismatches == 0 && t < 5.0, fmt("50 clouds, %d mismatches, %.2f s (bound 5 s)", mismatches, t)};
}

// 2 ---------------------------------------------------------------------------
Outcome mls_reproduction() {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  const Vec3 n = Vec3(0.2, -0.4, 1.0).normalized();
  const Vec3 a = n.cross(Vec3::UnitX()).normalized();
  const Vec3 b = n.cross(a);
  PointCloud plane;
  for (int i = 0; i < 1500; ++i) plane.points.push_back(Vec3(3, -2, 5) + u(rng) * a + u(rng) * b);
  double plane_err = 0.0;
  for (int degree = 1; degree <= 3; ++degree) {
    MlsParams p;
    p.degree = degree;
    p.k = 30;
    p.kernel.bandwidth = 3.0;
    const MlsResult r = mls_project(plane, p);
    for (std::size_t i = 0; i < plane.size(); ++i) plane_err = std::max(plane_err, (r.cloud.points[i] - plane.points[i]).norm());
  }
  PointCloud quad;
  for (int i = 0; i < 1500; ++i) {
    const double x = u(rng), y = u(rng);
    quad.points.emplace_back(x, y, 0.02 * x * x - 0.015 * x * y + 0.01 * y * y + 0.2 * y - 1.0);
  }
  MlsParams p;
  p.degree = 2;
  p.k = 30;
  p.kernel.bandwidth = 3.0;
  const MlsResult r = mls_project(quad, p);
  double quad_err = 0.0;
  for (std::size_t i = 0; i < quad.size(); ++i) quad_err = std::max(quad_err, (r.cloud.points[i] - quad.points[i]).norm());
  return {plane_err < 1e-9 && quad_err < 1e-6,
          fmt("plane max %.2e mm (bound 1e-9), quadratic max %.2e mm (bound 1e-6)", plane_err, quad_err)};
}

// 3 ---------------------------------------------------------------------------
Outcome mls_noise_reduction() {
  bool ok = true;
  std::string detail;
  for (double sigma : {0.5, 1.0, 2.0}) {
    double worst_ratio = 0.0, worst_after = 0.0;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const PointCloud c = sphere_cloud(2000, 50.0, sigma, 300 + seed);
      MlsParams p;
      p.degree = 2;
      p.k = 40;
      p.kernel.bandwidth = 6.0;
      const MlsResult r = mls_project(c, p);
      const double before = rms_radial(c.points, Vec3::Zero(), 50.0);
      const double after = rms_radial(r.cloud.points, Vec3::Zero(), 50.0);
      ok = ok && after < before && after < 0.6 * sigma + 0.1;
      worst_ratio = std::max(worst_ratio, after / before);
      worst_after = std::max(worst_after, after);
    }
    detail += fmt("sigma %.1f: worst %.3f mm (bound %.2f), after/before <= %.3f; ", sigma, worst_after,
                  0.6 * sigma + 0.1, worst_ratio);
  }
  detail.resize(detail.size() - 2);
  return {ok, detail};
}

// 4 ---------------------------------------------------------------------------
Outcome poisson_manufactured() {
  const auto t0 = Clock::now();
  GridSpec g;
  g.dims = {64, 64, 64};
  g.cell_size = 1.0;
  const Vec3 c(31.5, 31.5, 31.5);
  const double R = 24.0;
  VectorField v(g);
  std::vector<double> phi(g.node_count());
  for (int k = 0; k < 64; ++k)
    for (int j = 0; j < 64; ++j)
      for (int i = 0; i < 64; ++i) {
        const Vec3 x = g.node_position(i, j, k);
        const double s = 1.0 - (x - c).squaredNorm() / (R * R);
        if (s <= 0.0) continue;
        phi[g.index(i, j, k)] = s * s * s * s;
        v.values[g.index(i, j, k)] = -8.0 * s * s * s * (x - c) / (R * R);
      }
  SolveReport rep;
  const ScalarField chi = solve_indicator(v, &rep);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    num += std::pow(chi.values[i] - phi[i], 2);
    den += phi[i] * phi[i];
  }
  const double err = std::sqrt(num / den);
  const double t = seconds_since(t0);
  return {err < 0.05 && rep.relative_residual < 1e-8 && t < 30.0,
          fmt("relative L2 error %.4f (bound 0.05), residual %.2e after %d iterations, %.2f s", err,
              rep.relative_residual, rep.iterations, t)};
}

// 5 ---------------------------------------------------------------------------
Outcome poisson_sphere() {
  const PointCloud clean = sphere_cloud(5000, 50.0, 0.0, 5);
  PoissonReport prep;
  const TriangleMesh m = poisson_reconstruct(clean, PoissonParams{}, &prep);
  const std::size_t open = count_boundary_edges(m);
  const double rms = rms_radial(m.vertices, Vec3::Zero(), 50.0);

  SceneSpec spec = SceneSpec::sphere_preset();
  const TriangleMesh gt = make_primitive(spec);
  const Trajectory traj = orbit_trajectory(spec);
  const PointCloud sampled = sample_visible_points(gt, traj, spec.intrinsics, 12, 17, surface_normal_fn(spec, gt));
  CorruptionSpec cs;
  cs.sigma_ray = 1.0;
  cs.sigma_lat = 1.0;
  cs.outlier_fraction = 0.05;
  cs.seed = 17;
  PipelineInputs in;
  in.cloud = corrupt(sampled, traj, cs).cloud;
  in.trajectory = traj;
  const PipelineResult r = run_pipeline(in, PipelineConfig{});
  SceneSpec fine = spec;
  fine.slices = 256;
  fine.stacks = 128;
  const RmsdResult rm = surface_rmsd(r.mesh, make_primitive(fine), 200, 200);
  return {open == 0 && rms < 1.5 && rm.rmsd < 2.5,
          fmt("clean: %zu boundary edges, RMS radial %.3f mm (bound 1.5); noisy %zu pts with 5%% outliers: RMSD %.3f mm "
              "(bound 2.5)",
              open, rms, in.cloud.size(), rm.rmsd)};
}

// 6 ---------------------------------------------------------------------------
Outcome liver_study() {
  const auto dir = scratch_dir("acceptance_liver");
  const nlohmann::json s = reproduce_study(dir, StudyOptions{});
  const auto& m = s.at("metrics");
  const double rmsd = m.at("rmsd").get<double>();
  const double extent = m.at("gt_longest_extent").get<double>();
  return {rmsd <= 6.0 && extent == 140.0,
          fmt("liver %.0f mm, %d frames, %zu pts: RMSD after ICP %.3f mm (bound 6), trajectory RMSE %.3f mm",
              extent, m.at("frames").get<int>(), m.at("cloud_points").get<std::size_t>(), rmsd,
              m.at("trajectory_rmse").get<double>())};
}

// 7 ---------------------------------------------------------------------------
Outcome trajectory_alignment() {
  const Trajectory gt = orbit_trajectory(SceneSpec::liver_preset());
  SimilarityTransform corruption;
  corruption.scale = 0.37;
  corruption.rotation = Quat(Eigen::AngleAxisd(1.1, Vec3(0.3, -1.0, 0.6).normalized()));
  corruption.translation = Vec3(-40, 12, 85);
  const Trajectory est = apply_transform(corruption, gt);
  const TrajectoryAlignment al = align_trajectories(est, gt);
  const double scale_err = std::abs(al.transform.scale * corruption.scale - 1.0);
  const double rmse0 = trajectory_rmse(est, gt, al.transform);
  double lo = 1e9, hi = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Trajectory noisy = apply_transform(corruption, perturb_trajectory(gt, 1.0, seed));
    const double rmse = trajectory_rmse(noisy, gt, align_trajectories(noisy, gt).transform);
    lo = std::min(lo, rmse);
    hi = std::max(hi, rmse);
  }
  return {scale_err < 1e-9 && rmse0 < 1e-6 && lo >= 0.7 && hi <= 1.3,
          fmt("noiseless scale error %.1e, RMSE %.1e mm; sigma 1 mm over 20 seeds: RMSE in [%.3f, %.3f] mm", scale_err,
              rmse0, lo, hi)};
}

// 8 ---------------------------------------------------------------------------
Outcome rmsd_offset_planes() {
  double worst = 0.0;
  for (double offset : {0.1, 0.5, 1.0, 2.5, 7.25}) {
    const RmsdResult r = surface_rmsd(plane_mesh(30.0, offset, 6), plane_mesh(30.0, 0.0, 3), 200, 200);
    worst = std::max(worst, std::abs(r.rmsd - offset));
  }
  return {worst < 1e-12, fmt("max |RMSD - offset| %.1e (bound 1e-12)", worst)};
}

// 9 ---------------------------------------------------------------------------
Outcome depth_oracle() {
  // Fine tessellation so facet sag (~0.004 mm) stays below the tolerance.
  SceneSpec spec = SceneSpec::sphere_preset();
  spec.slices = 256;
  spec.stacks = 128;
  const TriangleMesh mesh = make_primitive(spec);
  const Trajectory traj = orbit_trajectory(spec);
  const double r = spec.semi_axes.x();
  std::size_t covered = 0, good = 0;
  for (std::size_t f = 0; f < traj.size(); f += 150) {
    const CameraPose& pose = traj.poses[f];
    const DepthMap map = rasterize_depth(mesh, spec.intrinsics, pose);
    for (int v = 0; v < spec.intrinsics.height; ++v) {
      for (int u = 0; u < spec.intrinsics.width; ++u) {
        const double d = map.at(u, v);
        if (!(d > 0.0)) continue;
        ++covered;
        const Vec3 dir = pose.rotation * spec.intrinsics.pixel_ray(u, v);
        const Vec3 oc = pose.translation;
        const double b = oc.dot(dir);
        const double disc = b * b - (oc.squaredNorm() - r * r);
        if (disc < 0.0) continue;
        if (std::abs(-b - std::sqrt(disc) - d) <= 0.5) ++good;
      }
    }
  }
  const double frac = covered ? static_cast<double>(good) / static_cast<double>(covered) : 0.0;
  return {frac >= 0.99, fmt("%.4f of %zu covered pixels within 0.5 mm (bound 0.99)", frac, covered)};
}

// 10 --------------------------------------------------------------------------
Outcome performance() {
  SceneSpec spec = SceneSpec::sphere_preset();
  spec.orbit.n_frames = 250;
  const TriangleMesh gt = make_primitive(spec);
  const Trajectory traj = orbit_trajectory(spec);
  PointCloud cloud = sample_visible_points(gt, traj, spec.intrinsics, 200, 3, surface_normal_fn(spec, gt));
  cloud.points.resize(10000);
  cloud.normals.resize(10000);
  cloud.source_frame.resize(10000);
  CorruptionSpec cs;
  cs.sigma_ray = 1.0;
  cs.outlier_fraction = 0.02;
  cs.seed = 3;
  PipelineInputs in;
  in.cloud = corrupt(cloud, traj, cs).cloud;
  in.trajectory = traj;
  const auto t0 = Clock::now();
  const PipelineResult r = run_pipeline(in, PipelineConfig{});
  const double t = seconds_since(t0);
  return {in.cloud.size() >= 10000 && t <= 2.0,
          fmt("%zu points, %.3f s on %d thread(s) (bound 2 s)", in.cloud.size(), t, thread_count())};
}

// 11 --------------------------------------------------------------------------
Outcome determinism() {
  const auto a = scratch_dir("acceptance_det_a");
  const auto b = scratch_dir("acceptance_det_b");
  auto run = [](const std::filesystem::path& d) {
    const std::string cmd = std::string(DEPTHFORGE_CLI_PATH) + " reproduce-study --seed 7 --out-dir " + d.string() +
                            " >/dev/null 2>&1";
    return std::system(cmd.c_str());
  };
  if (run(a) != 0 || run(b) != 0) return {false, "reproduce-study exited with an error"};
  auto metrics = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in).at("metrics");
  };
  const bool same_study = metrics(a / "study.json") == metrics(b / "study.json");
  const bool same_report = metrics(a / "pipeline_report.json") == metrics(b / "pipeline_report.json");
  return {same_study && same_report,
          fmt("study metrics %s, pipeline metrics %s across two runs", same_study ? "identical" : "DIFFER",
              same_report ? "identical" : "DIFFER")};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"filter oracle equivalence", filters_match_oracles},
      {"MLS plane/polynomial reproduction", mls_reproduction},
      {"MLS noise reduction", mls_noise_reduction},
      {"Poisson manufactured solution", poisson_manufactured},
      {"Poisson sphere reconstruction", poisson_sphere},
      {"liver-scale study", liver_study},
      {"trajectory alignment", trajectory_alignment},
      {"RMSD formula exactness", rmsd_offset_planes},
      {"depth rasterizer oracle", depth_oracle},
      {"performance", performance},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %-36s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
