// depthforge command-line front end.

#include "depthforge/config.hpp"
#include "depthforge/depth.hpp"
#include "depthforge/error.hpp"
#include "depthforge/eval.hpp"
#include "depthforge/filters.hpp"
#include "depthforge/io.hpp"
#include "depthforge/mls.hpp"
#include "depthforge/parallel.hpp"
#include "depthforge/pipeline.hpp"
#include "depthforge/poisson.hpp"
#include "depthforge/study.hpp"
#include "depthforge/synth.hpp"
#include "depthforge/transform.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace depthforge;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

json base_report(const std::string& command) {
  return {{"schema_version", kReportSchemaVersion}, {"tool", tool_info()}, {"command", command}};
}

void emit(const json& report, const std::string& path) {
  if (path.empty()) {
    std::cout << report.dump(2) << '\n';
  } else {
    write_json(path, report);
  }
}

json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

json transform_json(const SimilarityTransform& t) {
  return {{"scale", t.scale},
          {"rotation_xyzw", {t.rotation.x(), t.rotation.y(), t.rotation.z(), t.rotation.w()}},
          {"translation", vec_json(t.translation)}};
}

std::optional<double> parse_auto(const std::string& s, const std::string& flag) {
  if (s.empty() || s == "auto") return std::nullopt;
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(flag + " expects a number or 'auto', got '" + s + "'");
  }
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  std::string preset = "liver";
  std::string mesh;
  int frames = 900;
  double fps = 30.0;
  int points_per_frame = 40;
  int skip_frames = 0;
  double sigma_ray = 2.0;
  double sigma_lat = 0.5;
  double outliers = 0.05;
  double scale = 0.37;
  double pose_noise = 0.0;
  std::uint64_t seed = 42;
  std::string out_dir;
};

int run_synth(const SynthArgs& a) {
  SceneSpec spec = SceneSpec::preset(a.preset);
  if (!a.mesh.empty()) {
    spec.primitive = PrimitiveKind::MeshFile;
    spec.mesh_path = a.mesh;
  }
  spec.orbit.n_frames = a.frames;
  spec.orbit.fps = a.fps;
  spec.points_per_frame = a.points_per_frame;
  spec.skip_frames = a.skip_frames;
  spec.seed = a.seed;
  spec.validate();
  const CorruptionSpec cs{a.sigma_ray, a.sigma_lat, a.outliers, a.scale, a.seed + 1};
  cs.validate();

  const TriangleMesh mesh = make_primitive(spec);
  const Trajectory traj = orbit_trajectory(spec);
  const PointCloud clean = sample_visible_points(mesh, traj, spec.intrinsics, spec.points_per_frame, spec.seed,
                                                 surface_normal_fn(spec, mesh), spec.skip_frames);
  const CorruptionResult cr = corrupt(clean, traj, cs);
  Trajectory observed;
  for (const auto& p : traj.poses) {
    if (p.frame_id >= spec.skip_frames) observed.poses.push_back(p);
  }
  const Trajectory est = apply_transform(cr.scale_transform, perturb_trajectory(observed, a.pose_noise, a.seed + 2));

  const fs::path dir = a.out_dir;
  io::write_ply_mesh(dir / "gt_mesh.ply", mesh);
  io::write_trajectory_csv(dir / "gt_traj.csv", traj);
  io::write_ply_cloud(dir / "cloud.ply", cr.cloud);
  io::write_trajectory_csv(dir / "est_traj.csv", est);
  io::write_intrinsics_json(dir / "intrinsics.json", spec.intrinsics);
  json scene = base_report("synth");
  scene["scene"] = {{"preset", a.preset},
                    {"primitive", to_string(spec.primitive)},
                    {"mesh_path", spec.mesh_path.string()},
                    {"semi_axes", vec_json(spec.semi_axes)},
                    {"slices", spec.slices},
                    {"stacks", spec.stacks},
                    {"orbit",
                     {{"center", vec_json(spec.orbit.center)},
                      {"radius", spec.orbit.radius},
                      {"elevation_min_deg", spec.orbit.elevation_min_deg},
                      {"elevation_max_deg", spec.orbit.elevation_max_deg},
                      {"elevation_cycles", spec.orbit.elevation_cycles},
                      {"revolutions", spec.orbit.revolutions},
                      {"n_frames", spec.orbit.n_frames},
                      {"fps", spec.orbit.fps}}},
                    {"intrinsics",
                     {{"fx", spec.intrinsics.fx},
                      {"fy", spec.intrinsics.fy},
                      {"cx", spec.intrinsics.cx},
                      {"cy", spec.intrinsics.cy},
                      {"width", spec.intrinsics.width},
                      {"height", spec.intrinsics.height}}},
                    {"points_per_frame", spec.points_per_frame},
                    {"skip_frames", spec.skip_frames},
                    {"seed", spec.seed}};
  scene["corruption"] = {{"sigma_ray", cs.sigma_ray},
                         {"sigma_lat", cs.sigma_lat},
                         {"outlier_fraction", cs.outlier_fraction},
                         {"global_scale", cs.global_scale},
                         {"seed", cs.seed},
                         {"pose_noise", a.pose_noise},
                         {"scale_transform", transform_json(cr.scale_transform)}};
  scene["counts"] = {{"vertices", mesh.vertices.size()},
                     {"triangles", mesh.triangles.size()},
                     {"frames", traj.size()},
                     {"points", cr.cloud.size()},
                     {"outliers", cr.outliers.size()}};
  write_json(dir / "scene.json", scene);
  std::cout << "wrote " << cr.cloud.size() << " points from " << traj.size() << " frames to " << dir.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct FilterArgs {
  std::string radius, voxel, input, output, report;
  int min_neighbors = 5;
};

int run_filter(const FilterArgs& a) {
  const PointCloud in = io::read_ply_cloud(a.input);
  json rep = base_report("filter");
  FilterDefaults d;
  const auto r = parse_auto(a.radius, "--radius");
  const auto v = parse_auto(a.voxel, "--voxel");
  if (!r || !v) d = default_filter_params(in);
  RadiusFilterParams rp;
  rp.radius = r ? *r : d.radius.radius;
  rp.min_neighbors = a.min_neighbors;
  VoxelFilterParams vp;
  vp.voxel_size = v ? *v : d.voxel.voxel_size;
  const auto t0 = Clock::now();
  const PointCloud mid = radius_outlier_removal(in, rp);
  const PointCloud out = voxel_downsample(mid, vp);
  io::write_ply_cloud(a.output, out);
  rep["params"] = {{"radius", rp.radius},
                   {"min_neighbors", rp.min_neighbors},
                   {"voxel_size", vp.voxel_size},
                   {"median_spacing", d.median_spacing > 0.0 ? json(d.median_spacing) : json(nullptr)}};
  rep["counts"] = {{"input", in.size()}, {"after_radius", mid.size()}, {"output", out.size()}};
  rep["timings_ms"] = {{"total", ms_since(t0)}};
  emit(rep, a.report);
  return 0;
}

struct MlsArgs {
  int degree = 2;
  std::string bandwidth = "auto";
  std::size_t k = 12;
  std::string input, output, report;
};

int run_mls(const MlsArgs& a) {
  const PointCloud in = io::read_ply_cloud(a.input);
  MlsParams p;
  p.degree = a.degree;
  p.k = a.k;
  const auto h = parse_auto(a.bandwidth, "--bandwidth");
  p.kernel.bandwidth = h ? *h : default_mls_bandwidth(in);
  const auto t0 = Clock::now();
  const MlsResult r = mls_project(in, p);
  io::write_ply_cloud(a.output, r.cloud);
  json rep = base_report("mls");
  rep["params"] = {{"degree", p.degree}, {"k", p.k}, {"bandwidth", p.kernel.bandwidth}};
  rep["counts"] = {{"input", in.size()}, {"output", r.cloud.size()}};
  rep["metrics"] = {{"failures", r.report.failures}, {"mean_displacement", r.report.mean_displacement}};
  rep["timings_ms"] = {{"total", ms_since(t0)}};
  emit(rep, a.report);
  return 0;
}

struct PoissonArgs {
  int resolution = 64;
  int padding = 4;
  std::string input, output, report;
};

int run_poisson(const PoissonArgs& a) {
  const PointCloud in = io::read_ply_cloud(a.input);
  PoissonParams p;
  p.resolution = a.resolution;
  p.padding = a.padding;
  PoissonReport pr;
  const auto t0 = Clock::now();
  const TriangleMesh mesh = poisson_reconstruct(in, p, &pr);
  io::write_ply_mesh(a.output, mesh);
  json rep = base_report("poisson");
  rep["params"] = {{"resolution", p.resolution}, {"padding", p.padding}, {"tolerance", p.solve.tolerance}};
  rep["grid"] = {{"dims", pr.grid.dims}, {"cell_size", pr.grid.cell_size}, {"origin", vec_json(pr.grid.origin)}};
  rep["metrics"] = {{"residual", pr.solve.relative_residual},
                    {"iterations", pr.solve.iterations},
                    {"isovalue", pr.isovalue},
                    {"component_count", pr.component_count},
                    {"raw_triangles", pr.raw_triangles},
                    {"vertices", mesh.vertices.size()},
                    {"triangles", mesh.triangles.size()},
                    {"boundary_edges", count_boundary_edges(mesh)}};
  rep["timings_ms"] = {{"total", ms_since(t0)}};
  emit(rep, a.report);
  return 0;
}

struct PipelineArgs {
  std::string config, input, output, trajectory, report;
  bool keep = false;
  std::vector<std::string> overrides;
};

int run_pipeline_cmd(const PipelineArgs& a, std::optional<int> threads) {
  PipelineConfig cfg = a.config.empty() ? PipelineConfig{} : read_config(a.config);
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!a.input.empty()) cfg.input = a.input;
  if (!a.output.empty()) cfg.output = a.output;
  if (!a.trajectory.empty()) cfg.trajectory = a.trajectory;
  if (!a.report.empty()) cfg.report = a.report;
  if (a.keep) cfg.keep_intermediates = true;
  if (threads) cfg.threads = threads;
  cfg.validate();
  const json rep = run_pipeline(cfg);
  if (cfg.report.empty()) std::cout << rep.dump(2) << '\n';
  return 0;
}

struct EvalSurfArgs {
  std::string grid = "200x200";
  int bins = 50;
  int icp_iters = 50;
  double icp_tol = 1e-6;
  std::string recon, gt, report, distance_ply, aligned;
};

int run_eval_surf(const EvalSurfArgs& a) {
  const auto [m, n] = parse_grid_size(a.grid);
  if (m < 1 || n < 1) throw ConfigError("--grid must be positive");
  TriangleMesh recon = io::read_ply_mesh(a.recon);
  const TriangleMesh gt = io::read_ply_mesh(a.gt);
  json rep = base_report("eval-surf");
  const auto t0 = Clock::now();
  if (a.icp_iters > 0) {
    IcpParams ip;
    ip.max_iterations = a.icp_iters;
    ip.tolerance = a.icp_tol;
    const IcpResult icp = icp_align(recon.vertices, gt, ip);
    recon = apply_transform(icp.transform, recon);
    rep["icp"] = {{"rms", icp.rms},
                  {"iterations", icp.iterations},
                  {"converged", icp.converged},
                  {"inliers", icp.inliers},
                  {"transform", transform_json(icp.transform)}};
  }
  const RmsdResult rm = surface_rmsd(recon, gt, m, n);
  const DistanceReport dr = distance_report(recon, gt, a.bins);
  rep["params"] = {{"grid", {m, n}}, {"bins", a.bins}, {"icp_iters", a.icp_iters}, {"icp_tol", a.icp_tol}};
  rep["metrics"] = {{"rmsd", rm.rmsd},
                    {"valid_samples", rm.valid},
                    {"invalid_samples", rm.invalid},
                    {"distance",
                     {{"mean", dr.summary.mean},
                      {"rms", dr.summary.rms},
                      {"min", dr.summary.min},
                      {"max", dr.summary.max},
                      {"p05", dr.summary.p05},
                      {"p50", dr.summary.p50},
                      {"p95", dr.summary.p95}}},
                    {"distance_mode", dr.mode()},
                    {"histogram", {{"edges", dr.bin_edges}, {"counts", dr.counts}}}};
  if (!a.distance_ply.empty()) write_distance_ply(a.distance_ply, recon, dr);
  if (!a.aligned.empty()) io::write_ply_mesh(a.aligned, recon);
  rep["timings_ms"] = {{"total", ms_since(t0)}};
  emit(rep, a.report);
  return 0;
}

struct EvalTrajArgs {
  std::string est, gt, report;
};

int run_eval_traj(const EvalTrajArgs& a) {
  const Trajectory est = io::read_trajectory_csv(a.est);
  const Trajectory gt = io::read_trajectory_csv(a.gt);
  const TrajectoryAlignment ta = align_trajectories(est, gt);
  json rep = base_report("eval-traj");
  rep["metrics"] = {{"rmse", trajectory_rmse(est, gt, ta.transform)},
                    {"scale", ta.transform.scale},
                    {"matched", ta.matched},
                    {"unmatched_est", ta.unmatched_est},
                    {"unmatched_gt", ta.unmatched_gt},
                    {"transform", transform_json(ta.transform)}};
  emit(rep, a.report);
  return 0;
}

struct DepthArgs {
  std::string mesh, intrinsics, trajectory, out = "depth", report;
  std::int64_t frame = 0;
};

int run_depth(const DepthArgs& a) {
  const TriangleMesh mesh = io::read_ply_mesh(a.mesh);
  const CameraIntrinsics intr = a.intrinsics.empty() ? CameraIntrinsics{} : io::read_intrinsics_json(a.intrinsics);
  const Trajectory traj = io::read_trajectory_csv(a.trajectory);
  const CameraPose* pose = traj.find(a.frame);
  if (!pose) throw ConfigError("frame " + std::to_string(a.frame) + " is not in " + a.trajectory);
  const auto t0 = Clock::now();
  const DepthMap map = rasterize_depth(mesh, intr, *pose);
  const fs::path pgm = a.out + ".pgm", raw = a.out + ".f32";
  write_depth_pgm(pgm, map);
  write_depth_raw(raw, map);
  double dmin = 0.0, dmax = 0.0;
  bool any = false;
  for (double d : map.depth) {
    if (d <= 0.0) continue;
    dmin = any ? std::min(dmin, d) : d;
    dmax = any ? std::max(dmax, d) : d;
    any = true;
  }
  json rep = base_report("depth");
  rep["params"] = {{"frame", a.frame}, {"width", intr.width}, {"height", intr.height}, {"mm_per_unit", kPgmMillimetresPerUnit}};
  rep["metrics"] = {{"covered_pixels", map.covered()}, {"min_depth", dmin}, {"max_depth", dmax}};
  rep["outputs"] = {{"pgm", pgm.string()}, {"raw", raw.string()}};
  rep["timings_ms"] = {{"total", ms_since(t0)}};
  emit(rep, a.report);
  return 0;
}

struct StudyArgs {
  std::string out_dir;
  StudyOptions opt;
};

int run_study(const StudyArgs& a, std::optional<int> threads) {
  StudyOptions opt = a.opt;
  if (threads) opt.pipeline.threads = threads;
  const json study = reproduce_study(a.out_dir, opt);
  std::cout << format_study_summary(study);
  return study.at("all_pass").get<bool>() ? 0 : 4;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"depthforge: surface reconstruction from sparse SLAM point clouds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("depthforge ") + DEPTHFORGE_VERSION);
  std::optional<int> threads;
  app.add_option("--threads", threads, "Worker threads (default: DEPTHFORGE_THREADS or all cores)");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a synthetic ground-truth scene");
  s->add_option("--preset", synth.preset, "liver or sphere")->check(CLI::IsMember({"liver", "sphere"}));
  s->add_option("--mesh", synth.mesh, "Use a PLY mesh instead of the preset primitive");
  s->add_option("--frames", synth.frames, "Number of frames");
  s->add_option("--fps", synth.fps, "Frame rate");
  s->add_option("--points-per-frame", synth.points_per_frame, "Rays cast per frame");
  s->add_option("--skip-frames", synth.skip_frames, "Frames withheld before initialisation");
  s->add_option("--sigma-ray", synth.sigma_ray, "Noise along the viewing ray (mm)");
  s->add_option("--sigma-lat", synth.sigma_lat, "Lateral noise (mm)");
  s->add_option("--outliers", synth.outliers, "Outlier fraction");
  s->add_option("--scale", synth.scale, "Global (monocular) scale");
  s->add_option("--pose-noise", synth.pose_noise, "RMS noise of the estimated camera centres (mm)");
  s->add_option("--seed", synth.seed, "Random seed");
  s->add_option("--out-dir", synth.out_dir, "Output directory")->required();

  FilterArgs filt;
  auto* f = app.add_subcommand("filter", "Radius outlier removal then voxel down-sampling");
  f->add_option("--radius", filt.radius, "Neighbour radius in mm or 'auto'");
  f->add_option("--min-neighbors", filt.min_neighbors, "Neighbours required within the radius");
  f->add_option("--voxel", filt.voxel, "Voxel edge in mm or 'auto'");
  f->add_option("--report", filt.report, "JSON report path (default stdout)");
  f->add_option("input", filt.input)->required();
  f->add_option("output", filt.output)->required();

  MlsArgs mls;
  auto* m = app.add_subcommand("mls", "Moving least squares projection");
  m->add_option("--degree", mls.degree, "Polynomial degree (1-3)");
  m->add_option("--bandwidth", mls.bandwidth, "Gaussian bandwidth in mm or 'auto'");
  m->add_option("--k", mls.k, "Neighbourhood size");
  m->add_option("--report", mls.report, "JSON report path (default stdout)");
  m->add_option("input", mls.input)->required();
  m->add_option("output", mls.output)->required();

  PoissonArgs poi;
  auto* p = app.add_subcommand("poisson", "Poisson surface reconstruction");
  p->add_option("--resolution", poi.resolution, "Cells along the longest axis");
  p->add_option("--padding", poi.padding, "Boundary padding in cells (>= 4)");
  p->add_option("--report", poi.report, "JSON report path (default stdout)");
  p->add_option("input", poi.input)->required();
  p->add_option("output", poi.output)->required();

  PipelineArgs pipe;
  auto* pl = app.add_subcommand("pipeline", "Run the full reconstruction pipeline");
  pl->add_option("--config", pipe.config, "key = value configuration file");
  pl->add_option("--input", pipe.input, "Input cloud (PLY)");
  pl->add_option("--output", pipe.output, "Output mesh (PLY)");
  pl->add_option("--trajectory", pipe.trajectory, "Estimated trajectory CSV for normal orientation");
  pl->add_option("--report", pipe.report, "JSON report path");
  pl->add_flag("--keep-intermediates", pipe.keep, "Write every intermediate cloud and mesh");
  pl->add_option("--set", pipe.overrides, "Override a configuration key (key=value)");

  EvalSurfArgs es;
  auto* e = app.add_subcommand("eval-surf", "Surface RMSD and distance map against a ground-truth mesh");
  e->add_option("--grid", es.grid, "Sample grid, e.g. 200x200");
  e->add_option("--bins", es.bins, "Histogram bins");
  e->add_option("--icp-iters", es.icp_iters, "ICP iterations before scoring (0 disables)");
  e->add_option("--icp-tol", es.icp_tol, "ICP RMS-change tolerance (mm)");
  e->add_option("--distance-ply", es.distance_ply, "Write the aligned mesh with per-vertex signed distance");
  e->add_option("--aligned", es.aligned, "Write the aligned mesh");
  e->add_option("--report", es.report, "JSON report path (default stdout)");
  e->add_option("recon", es.recon)->required();
  e->add_option("gt", es.gt)->required();

  EvalTrajArgs et;
  auto* t = app.add_subcommand("eval-traj", "Similarity-aligned trajectory RMSE");
  t->add_option("--report", et.report, "JSON report path (default stdout)");
  t->add_option("est", et.est)->required();
  t->add_option("gt", et.gt)->required();

  DepthArgs dp;
  auto* d = app.add_subcommand("depth", "Render a depth map of a mesh from a trajectory pose");
  d->add_option("--intrinsics", dp.intrinsics, "Intrinsics JSON (default 1024x768, f=700)");
  d->add_option("--trajectory", dp.trajectory, "Trajectory CSV holding the pose")->required();
  d->add_option("--pose", dp.frame, "Frame id of the pose")->required();
  d->add_option("--out", dp.out, "Output prefix for .pgm and .f32");
  d->add_option("--report", dp.report, "JSON report path (default stdout)");
  d->add_option("mesh", dp.mesh)->required();

  StudyArgs st;
  auto* r = app.add_subcommand("reproduce-study", "Synthetic ground-truth study end to end");
  r->add_option("--out-dir", st.out_dir, "Output directory")->required();
  r->add_option("--seed", st.opt.seed, "Random seed");
  r->add_option("--preset", st.opt.preset, "liver or sphere")->check(CLI::IsMember({"liver", "sphere"}));
  r->add_option("--frames", st.opt.frames, "Number of frames");
  r->add_option("--points-per-frame", st.opt.points_per_frame, "Rays cast per frame");
  r->add_option("--skip-frames", st.opt.skip_frames, "Frames before SLAM initialisation");
  r->add_option("--sigma-ray", st.opt.sigma_ray, "Noise along the viewing ray (mm)");
  r->add_option("--sigma-lat", st.opt.sigma_lat, "Lateral noise (mm)");
  r->add_option("--outliers", st.opt.outliers, "Outlier fraction");
  r->add_option("--scale", st.opt.scale, "Global (monocular) scale");
  r->add_option("--pose-noise", st.opt.pose_noise, "RMS noise of the estimated camera centres (mm)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err) == 0 ? 0 : 2;
  }

  try {
    set_thread_count(resolve_thread_count(threads));
    if (*s) return run_synth(synth);
    if (*f) return run_filter(filt);
    if (*m) return run_mls(mls);
    if (*p) return run_poisson(poi);
    if (*pl) return run_pipeline_cmd(pipe, threads);
    if (*e) return run_eval_surf(es);
    if (*t) return run_eval_traj(et);
    if (*d) return run_depth(dp);
    if (*r) return run_study(st, threads);
  } catch (const StageFailure& err) {
    std::cerr << "error: stage " << err.stage() << " failed: " << err.what() << '\n';
    return exit_code_for(err.kind());
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return exit_code_for(err.kind());
  } catch (const fs::filesystem_error& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 4;
  }
  return 0;
}
