#include "depthforge/study.hpp"

#include "depthforge/error.hpp"
#include "depthforge/eval.hpp"
#include "depthforge/io.hpp"
#include "depthforge/pipeline.hpp"
#include "depthforge/synth.hpp"
#include "depthforge/transform.hpp"

#include <chrono>
#include <cstdio>
#include <sstream>

namespace depthforge {
namespace {

using json = nlohmann::json;

/// Rigid transform taking world coordinates into the frame of `pose`.
SimilarityTransform world_to_camera(const CameraPose& pose) {
  SimilarityTransform t;
  t.rotation = pose.rotation.conjugate();
  t.translation = -(t.rotation * pose.translation);
  return t;
}

json check(const std::string& name, double value, const std::string& op, double bound) {
  const bool pass = op == "<=" ? value <= bound : op == "<" ? value < bound : value == bound;
  return {{"name", name}, {"value", value}, {"op", op}, {"bound", bound}, {"pass", pass}};
}

}  // namespace

void StudyOptions::validate() const {
  if (frames < 2) throw ParameterError("study needs at least 2 frames");
  if (points_per_frame < 1) throw ParameterError("points per frame must be at least 1");
  if (skip_frames < 0 || skip_frames >= frames) throw ParameterError("skip_frames must be in [0, frames)");
  if (!(pose_noise >= 0.0)) throw ParameterError("pose noise must be non-negative");
  CorruptionSpec c{sigma_ray, sigma_lat, outliers, scale, seed};
  c.validate();
  pipeline.validate();
}

json StudyOptions::to_json() const {
  return {{"seed", seed},
          {"preset", preset},
          {"frames", frames},
          {"points_per_frame", points_per_frame},
          {"skip_frames", skip_frames},
          {"sigma_ray", sigma_ray},
          {"sigma_lat", sigma_lat},
          {"outliers", outliers},
          {"scale", scale},
          {"pose_noise", pose_noise},
          {"rmsd_bound", rmsd_bound}};
}

json reproduce_study(const std::filesystem::path& out_dir, const StudyOptions& opt) {
  opt.validate();
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(out_dir);

  SceneSpec spec = SceneSpec::preset(opt.preset);
  spec.seed = opt.seed;
  spec.orbit.n_frames = opt.frames;
  spec.points_per_frame = opt.points_per_frame;
  spec.skip_frames = opt.skip_frames;
  const TriangleMesh gt_mesh = make_primitive(spec);
  const Trajectory gt_traj = orbit_trajectory(spec);
  const PointCloud clean =
      sample_visible_points(gt_mesh, gt_traj, spec.intrinsics, spec.points_per_frame, spec.seed,
                            surface_normal_fn(spec, gt_mesh), spec.skip_frames);

  const CorruptionSpec cspec{opt.sigma_ray, opt.sigma_lat, opt.outliers, opt.scale, opt.seed + 1};
  const CorruptionResult corrupted = corrupt(clean, gt_traj, cspec);

  // The SLAM estimate only covers frames after initialisation and lives in a
  // scaled frame anchored at the first tracked camera.
  Trajectory observed;
  for (const auto& p : gt_traj.poses) {
    if (p.frame_id >= opt.skip_frames) observed.poses.push_back(p);
  }
  const Trajectory noisy = perturb_trajectory(observed, opt.pose_noise, opt.seed + 2);
  const Trajectory scaled_clean = apply_transform(corrupted.scale_transform, observed);
  const Trajectory scaled = apply_transform(corrupted.scale_transform, noisy);
  const SimilarityTransform to_slam = world_to_camera(scaled_clean.poses.front());
  const Trajectory est = apply_transform(to_slam, scaled);
  const Trajectory est_noiseless = apply_transform(to_slam, scaled_clean);
  const PointCloud cloud = apply_transform(to_slam, corrupted.cloud);

  io::write_ply_mesh(out_dir / "gt_mesh.ply", gt_mesh);
  io::write_trajectory_csv(out_dir / "gt_traj.csv", gt_traj);
  io::write_ply_cloud(out_dir / "cloud.ply", cloud);
  io::write_trajectory_csv(out_dir / "est_traj.csv", est);
  io::write_intrinsics_json(out_dir / "intrinsics.json", spec.intrinsics);

  PipelineConfig cfg = opt.pipeline;
  cfg.input = out_dir / "cloud.ply";
  cfg.trajectory = out_dir / "est_traj.csv";
  cfg.output = out_dir / "recon.ply";
  cfg.report = out_dir / "pipeline_report.json";
  cfg.gt_mesh = out_dir / "gt_mesh.ply";
  cfg.gt_trajectory = out_dir / "gt_traj.csv";
  {
    auto out = io::open_for_write(out_dir / "pipeline.cfg");
    out << format_config(cfg);
  }
  const json report = run_pipeline(cfg);
  const json& pm = report.at("metrics");

  const TrajectoryAlignment exact = align_trajectories(est_noiseless, gt_traj);
  const double noiseless_rmse = trajectory_rmse(est_noiseless, gt_traj, exact.transform);
  const Aabb box = bounding_box(gt_mesh.vertices);

  json metrics = {
      {"gt_longest_extent", box.extent().maxCoeff()},
      {"frames", gt_traj.size()},
      {"cloud_points", cloud.size()},
      {"outlier_points", corrupted.outliers.size()},
      {"trajectory_rmse", pm.at("trajectory_rmse")},
      {"trajectory_scale", pm.at("trajectory_scale")},
      {"trajectory_rmse_noiseless", noiseless_rmse},
      {"trajectory_scale_error_noiseless", std::abs(exact.transform.scale * opt.scale - 1.0)},
      {"rmsd", pm.at("rmsd")},
      {"rmsd_valid_samples", pm.at("rmsd_valid_samples")},
      {"rmsd_invalid_samples", pm.at("rmsd_invalid_samples")},
      {"icp_rms", pm.at("icp_rms")},
      {"distance", pm.at("distance")},
      {"mesh_triangles", pm.at("mesh_triangles")},
      {"poisson_residual", pm.at("poisson_residual")},
  };
  json checks = json::array();
  checks.push_back(check("surface_rmsd_mm", pm.at("rmsd").get<double>(), "<=", opt.rmsd_bound));
  checks.push_back(check("trajectory_rmse_noiseless_mm", noiseless_rmse, "<", 1e-6));
  checks.push_back(check("trajectory_scale_error_noiseless", metrics["trajectory_scale_error_noiseless"], "<", 1e-9));
  checks.push_back(check("poisson_residual", pm.at("poisson_residual").get<double>(), "<", 1e-8));
  if (opt.preset == "liver") checks.push_back(check("gt_longest_extent_mm", box.extent().maxCoeff(), "==", 140.0));
  bool all_pass = true;
  for (const auto& c : checks) all_pass = all_pass && c.at("pass").get<bool>();

  json study = {{"schema_version", kReportSchemaVersion},
                {"tool", tool_info()},
                {"options", opt.to_json()},
                {"scene", {{"primitive", to_string(spec.primitive)},
                           {"semi_axes", {spec.semi_axes.x(), spec.semi_axes.y(), spec.semi_axes.z()}},
                           {"orbit_radius", spec.orbit.radius},
                           {"fps", spec.orbit.fps},
                           {"frames", spec.orbit.n_frames}}},
                {"metrics", metrics},
                {"checks", checks},
                {"all_pass", all_pass},
                {"timings_ms",
                 {{"pipeline", report.at("timings_ms")},
                  {"total", std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count()}}}};
  write_json(out_dir / "scene.json", {{"options", opt.to_json()}, {"scene", study["scene"]}});
  write_json(out_dir / "study.json", study);
  {
    auto out = io::open_for_write(out_dir / "summary.txt");
    out << format_study_summary(study);
  }
  return study;
}

std::string format_study_summary(const json& study) {
  std::ostringstream os;
  const json& m = study.at("metrics");
  char line[256];
  os << "depthforge ground-truth study (seed " << study.at("options").at("seed") << ")\n";
  std::snprintf(line, sizeof line, "  trajectory RMSE      %10.4f mm (scale %.6f)\n", m.at("trajectory_rmse").get<double>(),
                m.at("trajectory_scale").get<double>());
  os << line;
  std::snprintf(line, sizeof line, "  surface RMSD         %10.4f mm (%lld valid samples)\n", m.at("rmsd").get<double>(),
                m.at("rmsd_valid_samples").get<long long>());
  os << line;
  const json& d = m.at("distance");
  std::snprintf(line, sizeof line, "  signed distance      mean %.3f, p05 %.3f, p95 %.3f mm\n", d.at("mean").get<double>(),
                d.at("p05").get<double>(), d.at("p95").get<double>());
  os << line;
  os << "checks:\n";
  for (const auto& c : study.at("checks")) {
    std::snprintf(line, sizeof line, "  %-34s %-4s %14.6g %s %g\n", c.at("name").get<std::string>().c_str(),
                  c.at("pass").get<bool>() ? "PASS" : "FAIL", c.at("value").get<double>(),
                  c.at("op").get<std::string>().c_str(), c.at("bound").get<double>());
    os << line;
  }
  return os.str();
}

}  // namespace depthforge
