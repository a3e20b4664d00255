#include "depthforge/pipeline.hpp"

#include "depthforge/eval.hpp"
#include "depthforge/filters.hpp"
#include "depthforge/io.hpp"
#include "depthforge/mls.hpp"
#include "depthforge/poisson.hpp"
#include "depthforge/spatial_index.hpp"
#include "depthforge/transform.hpp"

#include <chrono>
#include <cmath>

#ifndef DEPTHFORGE_VERSION
#define DEPTHFORGE_VERSION "unknown"
#endif

namespace depthforge {
namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

json summary_json(const DistanceSummary& s) {
  return {{"mean", s.mean}, {"rms", s.rms}, {"min", s.min}, {"max", s.max},
          {"p05", s.p05},   {"p50", s.p50}, {"p95", s.p95}};
}

json transform_json(const SimilarityTransform& t) {
  return {{"scale", t.scale},
          {"rotation_xyzw", {t.rotation.x(), t.rotation.y(), t.rotation.z(), t.rotation.w()}},
          {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

class Runner {
 public:
  explicit Runner(json& report) : report_(report) {}

  template <class F>
  auto stage(const std::string& name, std::size_t input_count, F&& body) {
    json rec = {{"name", name}, {"status", "running"}, {"input_count", input_count}};
    const auto t0 = Clock::now();
    try {
      auto out = body(rec);
      rec["status"] = "ok";
      rec["ms"] = elapsed_ms(t0);
      report_["timings_ms"][name] = rec["ms"];
      report_["stages"].push_back(rec);
      return out;
    } catch (const std::exception& e) {
      rec["status"] = "failed";
      rec["ms"] = elapsed_ms(t0);
      rec["error"] = e.what();
      report_["stages"].push_back(rec);
      report_["status"] = "failed";
      report_["failed_stage"] = name;
      report_["error"] = e.what();
      ErrorKind kind = ErrorKind::Numeric;
      if (const auto* err = dynamic_cast<const Error*>(&e)) kind = err->kind();
      throw StageFailure(kind, name, e.what(), report_);
    }
  }

 private:
  json& report_;
};

}  // namespace

json tool_info() { return {{"name", "depthforge"}, {"version", DEPTHFORGE_VERSION}}; }

void write_json(const std::filesystem::path& path, const json& j) {
  auto out = io::open_for_write(path);
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

std::filesystem::path intermediates_dir_for(const std::filesystem::path& output) {
  if (output.empty()) return "intermediates";
  return output.parent_path() / (output.stem().string() + "_intermediates");
}

PipelineResult run_pipeline(const PipelineInputs& in, const PipelineConfig& cfg,
                            const std::filesystem::path& intermediates_dir, Exec exec) {
  cfg.validate();
  if (cfg.threads) set_thread_count(*cfg.threads);
  PipelineResult result;
  json& report = result.report;
  report = {{"schema_version", kReportSchemaVersion}, {"tool", tool_info()},   {"status", "running"},
            {"failed_stage", nullptr},               {"config", cfg.to_json()}, {"threads", thread_count()},
            {"stages", json::array()},               {"metrics", json::object()}};
  json& metrics = report["metrics"];
  Runner run(report);
  const auto total_t0 = Clock::now();
  const bool keep = !intermediates_dir.empty();
  auto keep_cloud = [&](const char* file, const PointCloud& c) {
    if (keep) io::write_ply_cloud(intermediates_dir / file, c);
  };
  metrics["input_points"] = in.cloud.size();

  // Scale-free defaults come from the raw input spacing.
  FilterDefaults defaults;
  auto need_defaults = [&]() {
    if (defaults.median_spacing == 0.0) defaults = default_filter_params(in.cloud);
  };

  const PointCloud filtered = run.stage("radius_filter", in.cloud.size(), [&](json& rec) {
    RadiusFilterParams p;
    if (cfg.radius) {
      p.radius = *cfg.radius;
    } else {
      need_defaults();
      p.radius = defaults.radius.radius;
    }
    p.min_neighbors = cfg.min_neighbors;
    rec["params"] = {{"radius", p.radius}, {"min_neighbors", p.min_neighbors}};
    PointCloud out = radius_outlier_removal(in.cloud, p, exec);
    rec["output_count"] = out.size();
    keep_cloud("01_radius_filtered.ply", out);
    return out;
  });

  const PointCloud voxeled = run.stage("voxel_filter", filtered.size(), [&](json& rec) {
    VoxelFilterParams p;
    if (cfg.voxel_size) {
      p.voxel_size = *cfg.voxel_size;
    } else {
      need_defaults();
      p.voxel_size = defaults.voxel.voxel_size;
    }
    rec["params"] = {{"voxel_size", p.voxel_size}};
    PointCloud out = voxel_downsample(filtered, p);
    rec["output_count"] = out.size();
    keep_cloud("02_voxel.ply", out);
    return out;
  });

  const PointCloud with_normals = run.stage("normals", voxeled.size(), [&](json& rec) {
    rec["params"] = {{"k", cfg.normal_k}};
    PointCloud out = estimate_normals(voxeled, static_cast<std::size_t>(cfg.normal_k), exec);
    std::size_t unreliable = 0;
    for (auto f : out.normal_reliable) unreliable += f == 0 ? 1 : 0;
    rec["output_count"] = out.size();
    rec["unreliable"] = unreliable;
    keep_cloud("03_normals.ply", out);
    return out;
  });

  const PointCloud oriented = run.stage("orientation", with_normals.size(), [&](json& rec) {
    const bool by_traj = cfg.orientation == NormalOrientation::Trajectory && in.trajectory && !in.trajectory->empty();
    rec["params"] = {{"method", by_traj ? "trajectory" : "centroid"}};
    PointCloud out = by_traj ? orient_normals(with_normals, *in.trajectory) : orient_normals_outward(with_normals);
    rec["output_count"] = out.size();
    keep_cloud("04_oriented.ply", out);
    return out;
  });

  result.mls_cloud = run.stage("mls", oriented.size(), [&](json& rec) {
    MlsParams p;
    p.degree = cfg.mls_degree;
    p.k = static_cast<std::size_t>(cfg.mls_k);
    p.kernel.bandwidth = cfg.mls_bandwidth ? *cfg.mls_bandwidth : default_mls_bandwidth(oriented);
    rec["params"] = {{"degree", p.degree}, {"k", p.k}, {"bandwidth", p.kernel.bandwidth}};
    MlsResult r = mls_project(oriented, p, exec);
    rec["output_count"] = r.cloud.size();
    rec["failures"] = r.report.failures;
    rec["mean_displacement"] = r.report.mean_displacement;
    metrics["mls_failures"] = r.report.failures;
    metrics["mls_mean_displacement"] = r.report.mean_displacement;
    keep_cloud("05_mls.ply", r.cloud);
    return std::move(r.cloud);
  });

  result.mesh = run.stage("poisson", result.mls_cloud.size(), [&](json& rec) {
    PoissonParams p;
    p.resolution = cfg.poisson_resolution;
    p.padding = cfg.poisson_padding;
    PoissonReport pr;
    TriangleMesh mesh = poisson_reconstruct(result.mls_cloud, p, &pr, exec);
    rec["params"] = {{"resolution", p.resolution}, {"padding", p.padding}, {"tolerance", p.solve.tolerance}};
    rec["output_count"] = mesh.triangles.size();
    rec["grid"] = {{"dims", pr.grid.dims}, {"cell_size", pr.grid.cell_size}};
    rec["residual"] = pr.solve.relative_residual;
    rec["iterations"] = pr.solve.iterations;
    rec["isovalue"] = pr.isovalue;
    rec["component_count"] = pr.component_count;
    metrics["poisson_residual"] = pr.solve.relative_residual;
    metrics["poisson_iterations"] = pr.solve.iterations;
    metrics["isovalue"] = pr.isovalue;
    metrics["component_count"] = pr.component_count;
    metrics["mesh_vertices"] = mesh.vertices.size();
    metrics["mesh_triangles"] = mesh.triangles.size();
    metrics["boundary_edges"] = count_boundary_edges(mesh);
    if (keep) io::write_ply_mesh(intermediates_dir / "06_mesh.ply", mesh);
    return mesh;
  });

  const bool eval_traj = in.trajectory && in.gt_trajectory;
  if (in.gt_mesh || eval_traj) {
    result.aligned_mesh = run.stage("eval", result.mesh.vertices.size(), [&](json& rec) {
      TriangleMesh aligned = result.mesh;
      if (eval_traj) {
        const TrajectoryAlignment ta = align_trajectories(*in.trajectory, *in.gt_trajectory);
        const double rmse = trajectory_rmse(*in.trajectory, *in.gt_trajectory, ta.transform);
        metrics["trajectory_rmse"] = rmse;
        metrics["trajectory_scale"] = ta.transform.scale;
        metrics["trajectory_matched"] = ta.matched;
        metrics["trajectory_unmatched_est"] = ta.unmatched_est;
        metrics["trajectory_unmatched_gt"] = ta.unmatched_gt;
        metrics["trajectory_alignment"] = transform_json(ta.transform);
        aligned = apply_transform(ta.transform, aligned);
      }
      if (in.gt_mesh) {
        IcpParams ip;
        ip.max_iterations = cfg.icp_max_iters;
        ip.tolerance = cfg.icp_tol;
        const MeshBvh gt_bvh(*in.gt_mesh);
        const IcpResult icp = icp_align(aligned.vertices, gt_bvh, ip, exec);
        aligned = apply_transform(icp.transform, aligned);
        metrics["icp_rms"] = icp.rms;
        metrics["icp_iterations"] = icp.iterations;
        metrics["icp_converged"] = icp.converged;
        metrics["icp_transform"] = transform_json(icp.transform);
        const RmsdResult rm = surface_rmsd(aligned, *in.gt_mesh, cfg.eval_grid_m, cfg.eval_grid_n, exec);
        metrics["rmsd"] = rm.rmsd;
        metrics["rmsd_valid_samples"] = rm.valid;
        metrics["rmsd_invalid_samples"] = rm.invalid;
        const DistanceReport dr = distance_report(aligned, *in.gt_mesh, cfg.eval_bins, exec);
        metrics["distance"] = summary_json(dr.summary);
        metrics["distance_mode"] = dr.mode();
        metrics["histogram"] = {{"edges", dr.bin_edges}, {"counts", dr.counts}};
        if (!cfg.output.empty()) {
          const auto dist_path = cfg.output.parent_path() / (cfg.output.stem().string() + "_distance.ply");
          write_distance_ply(dist_path, aligned, dr);
          rec["distance_ply"] = dist_path.string();
        }
      }
      rec["params"] = {{"eval_grid", {cfg.eval_grid_m, cfg.eval_grid_n}},
                       {"eval_bins", cfg.eval_bins},
                       {"icp_max_iters", cfg.icp_max_iters},
                       {"icp_tol", cfg.icp_tol}};
      rec["output_count"] = aligned.vertices.size();
      return aligned;
    });
  }

  report["status"] = "ok";
  report["timings_ms"]["total"] = elapsed_ms(total_t0);
  return result;
}

json run_pipeline(const PipelineConfig& cfg, Exec exec) {
  cfg.validate();
  if (cfg.input.empty()) throw ConfigError("pipeline needs an input cloud");
  auto write_report = [&](const json& r) {
    if (!cfg.report.empty()) write_json(cfg.report, r);
  };
  PipelineInputs in;
  try {
    in.cloud = io::read_ply_cloud(cfg.input);
    if (!cfg.trajectory.empty()) in.trajectory = io::read_trajectory_csv(cfg.trajectory);
    if (!cfg.gt_mesh.empty()) in.gt_mesh = io::read_ply_mesh(cfg.gt_mesh);
    if (!cfg.gt_trajectory.empty()) in.gt_trajectory = io::read_trajectory_csv(cfg.gt_trajectory);
  } catch (const Error& e) {
    json r = {{"schema_version", kReportSchemaVersion}, {"tool", tool_info()}, {"status", "failed"},
              {"failed_stage", "input"}, {"error", e.what()}, {"config", cfg.to_json()}};
    write_report(r);
    throw;
  }
  const auto dir = cfg.keep_intermediates ? intermediates_dir_for(cfg.output) : std::filesystem::path{};
  try {
    PipelineResult res = run_pipeline(in, cfg, dir, exec);
    if (!cfg.output.empty()) {
      io::write_ply_mesh(cfg.output, res.mesh);
      res.report["outputs"]["mesh"] = cfg.output.string();
    }
    if (!dir.empty()) res.report["outputs"]["intermediates"] = dir.string();
    write_report(res.report);
    return res.report;
  } catch (const StageFailure& f) {
    write_report(f.report());
    throw;
  }
}

}  // namespace depthforge
