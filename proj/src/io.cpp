#include "depthforge/io.hpp"

#include "depthforge/error.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string_view>
#include <vector>

namespace depthforge::io {
namespace {

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  if (sep == ' ') {
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
      if (j > i) out.push_back(line.substr(i, j - i));
      i = j;
    }
    return out;
  }
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == sep) {
      auto tok = line.substr(start, i - start);
      while (!tok.empty() && (tok.back() == '\r' || tok.back() == ' ')) tok.remove_suffix(1);
      while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
      out.push_back(tok);
      start = i + 1;
    }
  }
  return out;
}

struct LineReader {
  std::istream& in;
  const std::string& name;
  std::size_t line_no = 0;
  std::string line;

  bool next() {
    if (!std::getline(in, line)) return false;
    ++line_no;
    return true;
  }
  /// Next non-blank line or a parse error naming `what`.
  std::string_view require(const char* what) {
    while (next()) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) return line;
    }
    throw ParseError(name, line_no + 1, std::string("unexpected end of file, expected ") + what);
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(name, line_no, msg); }
};

double parse_double(std::string_view tok, const LineReader& r) {
  double v = 0.0;
  if (!tok.empty() && tok.front() == '+') tok.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) r.fail("malformed number '" + std::string(tok) + "'");
  if (!std::isfinite(v)) r.fail("non-finite value '" + std::string(tok) + "'");
  return v;
}

std::int64_t parse_int(std::string_view tok, const LineReader& r) {
  const double v = parse_double(tok, r);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) r.fail("expected an integer, got '" + std::string(tok) + "'");
  return static_cast<std::int64_t>(v);
}

struct PlyProperty {
  std::string name;
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

struct PlyData {
  PointCloud cloud;
  std::vector<Triangle> triangles;
};

PlyData parse_ply(std::istream& in, const std::string& name) {
  LineReader r{in, name, 0, {}};
  {
    const auto magic = split(r.require("ply magic"), ' ');
    if (magic.size() != 1 || magic[0] != "ply") r.fail("missing 'ply' magic line");
  }
  std::vector<PlyElement> elements;
  bool format_seen = false;
  for (;;) {
    const auto toks = split(r.require("end_header"), ' ');
    if (toks.empty()) continue;
    if (toks[0] == "end_header") break;
    if (toks[0] == "comment" || toks[0] == "obj_info") continue;
    if (toks[0] == "format") {
      if (toks.size() < 2 || toks[1] != "ascii") r.fail("only ASCII PLY is supported");
      format_seen = true;
    } else if (toks[0] == "element") {
      if (toks.size() != 3) r.fail("malformed element line");
      const auto count = parse_int(toks[2], r);
      if (count < 0) r.fail("negative element count");
      elements.push_back({std::string(toks[1]), static_cast<std::size_t>(count), {}});
    } else if (toks[0] == "property") {
      if (elements.empty()) r.fail("property before any element");
      if (toks.size() == 5 && toks[1] == "list") {
        elements.back().props.push_back({std::string(toks[4]), true});
      } else if (toks.size() == 3) {
        elements.back().props.push_back({std::string(toks[2]), false});
      } else {
        r.fail("malformed property line");
      }
    } else {
      r.fail("unknown header keyword '" + std::string(toks[0]) + "'");
    }
  }
  if (!format_seen) r.fail("missing format line");

  PlyData data;
  for (const auto& el : elements) {
    const bool is_vertex = el.name == "vertex";
    const bool is_face = el.name == "face";
    int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, iframe = -1, ilist = -1;
    for (int p = 0; p < static_cast<int>(el.props.size()); ++p) {
      const auto& n = el.props[p].name;
      if (n == "x") ix = p;
      else if (n == "y") iy = p;
      else if (n == "z") iz = p;
      else if (n == "nx") inx = p;
      else if (n == "ny") iny = p;
      else if (n == "nz") inz = p;
      else if (n == "source_frame") iframe = p;
      else if (el.props[p].is_list && (n == "vertex_indices" || n == "vertex_index")) ilist = p;
    }
    if (is_vertex && (ix < 0 || iy < 0 || iz < 0)) r.fail("vertex element lacks x/y/z properties");
    const bool normals = is_vertex && inx >= 0 && iny >= 0 && inz >= 0;
    if (is_vertex) {
      data.cloud.points.reserve(el.count);
      if (normals) data.cloud.normals.reserve(el.count);
    }
    if (is_face && ilist < 0) r.fail("face element lacks a vertex_indices list");

    std::vector<double> scalars(el.props.size());
    std::vector<std::int64_t> list;
    for (std::size_t row = 0; row < el.count; ++row) {
      const auto toks = split(r.require(el.name.c_str()), ' ');
      std::size_t t = 0;
      for (std::size_t p = 0; p < el.props.size(); ++p) {
        if (t >= toks.size()) r.fail("too few values for element '" + el.name + "'");
        if (el.props[p].is_list) {
          const auto len = parse_int(toks[t++], r);
          if (len < 0 || t + static_cast<std::size_t>(len) > toks.size()) r.fail("list length exceeds line");
          if (static_cast<int>(p) == ilist) list.clear();
          for (std::int64_t k = 0; k < len; ++k) {
            const auto v = parse_int(toks[t++], r);
            if (static_cast<int>(p) == ilist) list.push_back(v);
          }
        } else {
          scalars[p] = parse_double(toks[t++], r);
        }
      }
      if (t != toks.size()) r.fail("too many values for element '" + el.name + "'");
      if (is_vertex) {
        data.cloud.points.emplace_back(scalars[ix], scalars[iy], scalars[iz]);
        if (normals) data.cloud.normals.emplace_back(scalars[inx], scalars[iny], scalars[inz]);
        if (iframe >= 0) {
          const double f = scalars[iframe];
          if (f < 0 || f != std::floor(f)) r.fail("source_frame must be a non-negative integer");
          data.cloud.source_frame.push_back(static_cast<std::int64_t>(f));
        }
      } else if (is_face) {
        if (list.size() < 3) r.fail("face with fewer than three vertices");
        for (std::size_t k = 1; k + 1 < list.size(); ++k) {
          const std::int64_t a = list[0], b = list[k], c = list[k + 1];
          const auto nv = static_cast<std::int64_t>(data.cloud.points.size());
          if (a < 0 || b < 0 || c < 0 || a >= nv || b >= nv || c >= nv) r.fail("face index out of range");
          if (a == b || b == c || a == c) r.fail("degenerate face");
          data.triangles.push_back({static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b),
                                    static_cast<std::uint32_t>(c)});
        }
      }
    }
  }
  while (r.next()) {
    if (r.line.find_first_not_of(" \t\r") != std::string::npos) r.fail("data beyond the declared element counts");
  }
  for (std::size_t i = 0; i < data.cloud.normals.size(); ++i) {
    const double len = data.cloud.normals[i].norm();
    if (std::abs(len - 1.0) > 1e-6) {
      if (len < 1e-12) throw ParseError(name, r.line_no, "zero-length normal on vertex " + std::to_string(i));
      data.cloud.normals[i] /= len;
    }
  }
  return data;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return in;
}

void finish_write(std::ostream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

std::ofstream open_for_write(const std::filesystem::path& path, bool binary) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

PointCloud parse_ply_cloud(std::istream& in, const std::string& name) { return parse_ply(in, name).cloud; }

PointCloud read_ply_cloud(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return parse_ply_cloud(in, path.string());
}

TriangleMesh parse_ply_mesh(std::istream& in, const std::string& name) {
  auto data = parse_ply(in, name);
  TriangleMesh mesh;
  mesh.vertices = std::move(data.cloud.points);
  mesh.triangles = std::move(data.triangles);
  return mesh;
}

TriangleMesh read_ply_mesh(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return parse_ply_mesh(in, path.string());
}

void write_ply_cloud(std::ostream& out, const PointCloud& cloud) {
  out << "ply\nformat ascii 1.0\ncomment units mm\nelement vertex " << cloud.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (cloud.has_normals()) out << "property double nx\nproperty double ny\nproperty double nz\n";
  if (cloud.has_source_frame()) out << "property int source_frame\n";
  out << "end_header\n" << std::setprecision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    out << p.x() << ' ' << p.y() << ' ' << p.z();
    if (cloud.has_normals()) {
      const auto& n = cloud.normals[i];
      out << ' ' << n.x() << ' ' << n.y() << ' ' << n.z();
    }
    if (cloud.has_source_frame()) out << ' ' << cloud.source_frame[i];
    out << '\n';
  }
}

void write_ply_cloud(const std::filesystem::path& path, const PointCloud& cloud) {
  auto out = open_for_write(path);
  write_ply_cloud(out, cloud);
  finish_write(out, path);
}

void write_ply_mesh(std::ostream& out, const TriangleMesh& mesh, std::span<const double> vertex_scalar,
                    const std::string& scalar_name) {
  const bool scalar = !vertex_scalar.empty();
  if (scalar && vertex_scalar.size() != mesh.vertices.size()) {
    throw ParameterError("per-vertex scalar count does not match vertex count");
  }
  out << "ply\nformat ascii 1.0\ncomment units mm\nelement vertex " << mesh.vertices.size() << "\n"
      << "property double x\nproperty double y\nproperty double z\n";
  if (scalar) out << "property double " << scalar_name << "\n";
  out << "element face " << mesh.triangles.size() << "\nproperty list uchar int vertex_indices\nend_header\n"
      << std::setprecision(17);
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto& v = mesh.vertices[i];
    out << v.x() << ' ' << v.y() << ' ' << v.z();
    if (scalar) out << ' ' << vertex_scalar[i];
    out << '\n';
  }
  for (const auto& t : mesh.triangles) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

void write_ply_mesh(const std::filesystem::path& path, const TriangleMesh& mesh, std::span<const double> vertex_scalar,
                    const std::string& scalar_name) {
  auto out = open_for_write(path);
  write_ply_mesh(out, mesh, vertex_scalar, scalar_name);
  finish_write(out, path);
}

Trajectory parse_trajectory_csv(std::istream& in, const std::string& name) {
  LineReader r{in, name, 0, {}};
  const auto header = split(r.require("header"), ',');
  static const char* expected[] = {"frame", "tx", "ty", "tz", "qx", "qy", "qz", "qw"};
  if (header.size() != 8) r.fail("header must be frame,tx,ty,tz,qx,qy,qz,qw");
  for (int i = 0; i < 8; ++i) {
    if (header[i] != expected[i]) r.fail("header must be frame,tx,ty,tz,qx,qy,qz,qw");
  }
  Trajectory traj;
  while (r.next()) {
    if (r.line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto toks = split(r.line, ',');
    if (toks.size() != 8) r.fail("expected 8 columns, got " + std::to_string(toks.size()));
    CameraPose pose;
    pose.frame_id = parse_int(toks[0], r);
    if (pose.frame_id < 0) r.fail("negative frame id");
    pose.translation = Vec3(parse_double(toks[1], r), parse_double(toks[2], r), parse_double(toks[3], r));
    Quat q(parse_double(toks[7], r), parse_double(toks[4], r), parse_double(toks[5], r), parse_double(toks[6], r));
    const double norm = q.norm();
    if (std::abs(norm - 1.0) > 1e-6) r.fail("quaternion is not unit length");
    pose.rotation = q.normalized();
    if (!traj.poses.empty() && pose.frame_id <= traj.poses.back().frame_id) {
      r.fail("frame ids must be strictly increasing");
    }
    traj.poses.push_back(pose);
  }
  return traj;
}

Trajectory read_trajectory_csv(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  return parse_trajectory_csv(in, path.string());
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "frame,tx,ty,tz,qx,qy,qz,qw\n" << std::setprecision(17);
  for (const auto& p : traj.poses) {
    out << p.frame_id << ',' << p.translation.x() << ',' << p.translation.y() << ',' << p.translation.z() << ','
        << p.rotation.x() << ',' << p.rotation.y() << ',' << p.rotation.z() << ',' << p.rotation.w() << '\n';
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  auto out = open_for_write(path);
  write_trajectory_csv(out, traj);
  finish_write(out, path);
}

CameraIntrinsics read_intrinsics_json(const std::filesystem::path& path) {
  auto in = open_for_read(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed intrinsics JSON '" + path.string() + "': " + e.what());
  }
  CameraIntrinsics intr;
  try {
    intr.fx = j.at("fx").get<double>();
    intr.fy = j.at("fy").get<double>();
    intr.cx = j.at("cx").get<double>();
    intr.cy = j.at("cy").get<double>();
    intr.width = j.at("width").get<int>();
    intr.height = j.at("height").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("intrinsics JSON '" + path.string() + "': " + e.what());
  }
  intr.validate();
  return intr;
}

void write_intrinsics_json(const std::filesystem::path& path, const CameraIntrinsics& intr) {
  nlohmann::json j{{"fx", intr.fx}, {"fy", intr.fy}, {"cx", intr.cx},
                   {"cy", intr.cy}, {"width", intr.width}, {"height", intr.height}};
  auto out = open_for_write(path);
  out << j.dump(2) << '\n';
  finish_write(out, path);
}

}  // namespace depthforge::io
