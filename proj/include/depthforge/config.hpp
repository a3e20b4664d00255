#pragma once

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>

namespace depthforge {

enum class NormalOrientation { Trajectory, Centroid };

/// Flat `key = value` configuration for run_pipeline. Unset optionals take
/// the scale-free defaults derived from the data.
struct PipelineConfig {
  std::filesystem::path input;
  std::filesystem::path output;
  std::filesystem::path trajectory;   ///< estimated trajectory, for orientation
  std::filesystem::path report;
  bool keep_intermediates = false;

  std::optional<double> radius;
  int min_neighbors = 5;
  std::optional<double> voxel_size;

  int normal_k = 16;
  NormalOrientation orientation = NormalOrientation::Trajectory;

  int mls_degree = 2;
  std::optional<double> mls_bandwidth;
  int mls_k = 20;

  int poisson_resolution = 64;
  int poisson_padding = 4;

  std::filesystem::path gt_mesh;
  std::filesystem::path gt_trajectory;
  int eval_grid_m = 200;
  int eval_grid_n = 200;
  int eval_bins = 50;
  int icp_max_iters = 50;
  double icp_tol = 1e-6;

  std::optional<int> threads;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys and bad
/// values throw ConfigError naming the key and line.
PipelineConfig parse_config(const std::string& text, const std::string& name = "<config>");
PipelineConfig read_config(const std::filesystem::path& path);

/// Applies one `key`/`value` pair; used by the parser and by CLI overrides.
void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value);

/// Serialises to the same `key = value` format (round-trips through
/// parse_config).
std::string format_config(const PipelineConfig& cfg);

/// Parses "200x200" or "200".
std::pair<int, int> parse_grid_size(const std::string& text);

}  // namespace depthforge
