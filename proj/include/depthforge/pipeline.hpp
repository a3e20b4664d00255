#pragma once

#include "depthforge/config.hpp"
#include "depthforge/error.hpp"
#include "depthforge/parallel.hpp"
#include "depthforge/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace depthforge {

inline constexpr int kReportSchemaVersion = 1;

/// Stage names in execution order.
inline constexpr const char* kStageNames[] = {"radius_filter", "voxel_filter", "normals", "orientation",
                                              "mls",           "poisson",      "eval"};

/// A pipeline stage failed. Keeps the error category of the cause and the
/// partial report (with the failed stage named).
class StageFailure : public Error {
 public:
  StageFailure(ErrorKind kind, std::string stage, const std::string& what, nlohmann::json report)
      : Error(kind, stage + ": " + what), stage_(std::move(stage)), report_(std::move(report)) {}
  const std::string& stage() const noexcept { return stage_; }
  const nlohmann::json& report() const noexcept { return report_; }

 private:
  std::string stage_;
  nlohmann::json report_;
};

struct PipelineInputs {
  PointCloud cloud;
  std::optional<Trajectory> trajectory;
  std::optional<TriangleMesh> gt_mesh;
  std::optional<Trajectory> gt_trajectory;
};

struct PipelineResult {
  nlohmann::json report;
  TriangleMesh mesh;          ///< reconstruction in the input frame
  TriangleMesh aligned_mesh;  ///< after trajectory alignment + ICP (eval only)
  PointCloud mls_cloud;
};

/// radius filter -> voxel filter -> normals -> orientation -> MLS -> Poisson
/// -> optional evaluation. Intermediates are written to `intermediates_dir`
/// when non-empty (six files). Throws StageFailure.
PipelineResult run_pipeline(const PipelineInputs& inputs, const PipelineConfig& cfg,
                            const std::filesystem::path& intermediates_dir = {}, Exec exec = Exec::Parallel);

/// File-driven run: reads the inputs named in `cfg`, writes the mesh and the
/// JSON report (also on failure) and returns the report.
nlohmann::json run_pipeline(const PipelineConfig& cfg, Exec exec = Exec::Parallel);

/// Directory that receives intermediates for an output path.
std::filesystem::path intermediates_dir_for(const std::filesystem::path& output);

/// Writes `j` with two-space indentation; creates parent directories.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

nlohmann::json tool_info();

}  // namespace depthforge
