#include "depthforge/config.hpp"

#include "depthforge/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace depthforge {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("value of '" + key + "' is not a number: '" + v + "'");
  }
  return out;
}

int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("value of '" + key + "' is not an integer: '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("value of '" + key + "' is not a boolean: '" + v + "'");
}

std::optional<double> to_optional_double(const std::string& key, const std::string& v) {
  if (v == "auto") return std::nullopt;
  return to_double(key, v);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::pair<int, int> parse_grid_size(const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos) {
    const int v = to_int("grid", text);
    return {v, v};
  }
  return {to_int("grid", text.substr(0, x)), to_int("grid", text.substr(x + 1))};
}

void set_config_value(PipelineConfig& c, const std::string& key, const std::string& value) {
  if (key == "input") c.input = value;
  else if (key == "output") c.output = value;
  else if (key == "trajectory") c.trajectory = value;
  else if (key == "report") c.report = value;
  else if (key == "keep_intermediates") c.keep_intermediates = to_bool(key, value);
  else if (key == "radius") c.radius = to_optional_double(key, value);
  else if (key == "min_neighbors") c.min_neighbors = to_int(key, value);
  else if (key == "voxel_size") c.voxel_size = to_optional_double(key, value);
  else if (key == "normal_k") c.normal_k = to_int(key, value);
  else if (key == "orientation") {
    if (value == "trajectory") c.orientation = NormalOrientation::Trajectory;
    else if (value == "centroid") c.orientation = NormalOrientation::Centroid;
    else throw ConfigError("value of 'orientation' must be trajectory or centroid: '" + value + "'");
  }
  else if (key == "mls_degree") c.mls_degree = to_int(key, value);
  else if (key == "mls_bandwidth") c.mls_bandwidth = to_optional_double(key, value);
  else if (key == "mls_k") c.mls_k = to_int(key, value);
  else if (key == "poisson_resolution") c.poisson_resolution = to_int(key, value);
  else if (key == "poisson_padding") c.poisson_padding = to_int(key, value);
  else if (key == "gt_mesh") c.gt_mesh = value;
  else if (key == "gt_trajectory") c.gt_trajectory = value;
  else if (key == "eval_grid") {
    const auto [m, n] = parse_grid_size(value);
    c.eval_grid_m = m;
    c.eval_grid_n = n;
  }
  else if (key == "eval_bins") c.eval_bins = to_int(key, value);
  else if (key == "icp_max_iters") c.icp_max_iters = to_int(key, value);
  else if (key == "icp_tol") c.icp_tol = to_double(key, value);
  else if (key == "threads") c.threads = to_int(key, value);
  else throw ConfigError("unknown configuration key '" + key + "'");
}

PipelineConfig parse_config(const std::string& text, const std::string& name) {
  PipelineConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = name + ":" + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

PipelineConfig read_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void PipelineConfig::validate() const {
  if (radius && !(*radius > 0.0)) throw ConfigError("radius must be positive");
  if (min_neighbors < 1) throw ConfigError("min_neighbors must be at least 1");
  if (voxel_size && !(*voxel_size > 0.0)) throw ConfigError("voxel_size must be positive");
  if (normal_k < 3) throw ConfigError("normal_k must be at least 3");
  if (mls_degree < 1 || mls_degree > 3) throw ConfigError("mls_degree must be 1, 2 or 3");
  if (mls_bandwidth && !(*mls_bandwidth > 0.0)) throw ConfigError("mls_bandwidth must be positive");
  if (mls_k < (mls_degree + 1) * (mls_degree + 2) / 2) throw ConfigError("mls_k is too small for mls_degree");
  if (poisson_resolution < 8 || poisson_resolution > 192) throw ConfigError("poisson_resolution must be in [8, 192]");
  if (poisson_padding < 4) throw ConfigError("poisson_padding must be at least 4");
  if (eval_grid_m < 1 || eval_grid_n < 1) throw ConfigError("eval_grid must be positive");
  if (eval_bins < 1) throw ConfigError("eval_bins must be at least 1");
  if (icp_max_iters < 1) throw ConfigError("icp_max_iters must be at least 1");
  if (!(icp_tol >= 0.0)) throw ConfigError("icp_tol must be non-negative");
  if (threads && *threads < 1) throw ConfigError("threads must be at least 1");
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json j;
  j["input"] = input.string();
  j["output"] = output.string();
  j["trajectory"] = trajectory.string();
  j["report"] = report.string();
  j["keep_intermediates"] = keep_intermediates;
  j["radius"] = radius ? nlohmann::json(*radius) : nlohmann::json("auto");
  j["min_neighbors"] = min_neighbors;
  j["voxel_size"] = voxel_size ? nlohmann::json(*voxel_size) : nlohmann::json("auto");
  j["normal_k"] = normal_k;
  j["orientation"] = orientation == NormalOrientation::Trajectory ? "trajectory" : "centroid";
  j["mls_degree"] = mls_degree;
  j["mls_bandwidth"] = mls_bandwidth ? nlohmann::json(*mls_bandwidth) : nlohmann::json("auto");
  j["mls_k"] = mls_k;
  j["poisson_resolution"] = poisson_resolution;
  j["poisson_padding"] = poisson_padding;
  j["gt_mesh"] = gt_mesh.string();
  j["gt_trajectory"] = gt_trajectory.string();
  j["eval_grid"] = std::to_string(eval_grid_m) + "x" + std::to_string(eval_grid_n);
  j["eval_bins"] = eval_bins;
  j["icp_max_iters"] = icp_max_iters;
  j["icp_tol"] = icp_tol;
  if (threads) j["threads"] = *threads;
  return j;
}

std::string format_config(const PipelineConfig& cfg) {
  std::ostringstream os;
  const nlohmann::json j = cfg.to_json();
  for (const auto& [key, value] : j.items()) {
    if (value.is_string()) {
      if (value.get<std::string>().empty()) continue;
      os << key << " = " << value.get<std::string>() << '\n';
    } else if (value.is_boolean()) {
      os << key << " = " << (value.get<bool>() ? "true" : "false") << '\n';
    } else if (value.is_number_integer()) {
      os << key << " = " << value.get<long long>() << '\n';
    } else {
      os << key << " = " << fmt(value.get<double>()) << '\n';
    }
  }
  return os.str();
}

}  // namespace depthforge
