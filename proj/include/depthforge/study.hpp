#pragma once

#include "depthforge/config.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace depthforge {

/// Synthetic ground-truth study: synth -> corrupt -> pipeline -> evaluation.
struct StudyOptions {
  std::uint64_t seed = 42;
  std::string preset = "liver";
  int frames = 900;
  int points_per_frame = 40;
  int skip_frames = 0;
  double sigma_ray = 2.0;      ///< mm
  double sigma_lat = 0.5;      ///< mm
  double outliers = 0.05;
  double scale = 0.37;         ///< monocular scale factor
  double pose_noise = 1.0;     ///< mm, 3D RMS of the estimated camera centres
  double rmsd_bound = 6.0;     ///< mm
  PipelineConfig pipeline;     ///< stage parameters; paths are filled in

  void validate() const;
  nlohmann::json to_json() const;
};

/// Writes the scene, the pipeline outputs, study.json and summary.txt into
/// `out_dir` and returns the study JSON. `metrics` holds every reproducible
/// value; timings are kept separately.
nlohmann::json reproduce_study(const std::filesystem::path& out_dir, const StudyOptions& options);

/// Human-readable table of the study JSON.
std::string format_study_summary(const nlohmann::json& study);

}  // namespace depthforge
