#include "depthforge/depth.hpp"

#include "depthforge/error.hpp"
#include "depthforge/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

namespace depthforge {
namespace {

constexpr double kNear = 1e-3;  // mm
constexpr int kBandRows = 16;

struct Projected {
  Vec3 a, b, c;  // camera-frame vertices of the original triangle
  std::array<std::array<double, 2>, 4> poly;  // clipped polygon in pixel space
  int count = 0;
  int umin = 0, umax = -1, vmin = 0, vmax = -1;
};

double edge(const std::array<double, 2>& p, const std::array<double, 2>& q, double x, double y) {
  return (q[0] - p[0]) * (y - p[1]) - (q[1] - p[1]) * (x - p[0]);
}

/// Inside test for a convex polygon of either winding, edges inclusive.
bool covers(const Projected& pr, double x, double y) {
  bool pos = false, neg = false;
  for (int e = 0; e < pr.count; ++e) {
    const double w = edge(pr.poly[e], pr.poly[(e + 1) % pr.count], x, y);
    pos |= w > 0.0;
    neg |= w < 0.0;
    if (pos && neg) return false;
  }
  return true;
}

}  // namespace

std::size_t DepthMap::covered() const {
  return static_cast<std::size_t>(std::count_if(depth.begin(), depth.end(), [](double d) { return d > 0.0; }));
}

DepthMap rasterize_depth(const TriangleMesh& mesh, const CameraIntrinsics& intr, const CameraPose& pose, Exec exec) {
  intr.validate();
  if (std::abs(pose.rotation.norm() - 1.0) > 1e-9) throw ParameterError("camera pose quaternion is not unit length");
  DepthMap map;
  map.intrinsics = intr;
  map.pose = pose;
  map.depth.assign(static_cast<std::size_t>(intr.width) * intr.height, 0.0);
  if (mesh.empty()) return map;

  const auto to_pixel = [&](const Vec3& p) {
    return std::array<double, 2>{intr.fx * p.x() / p.z() + intr.cx, intr.fy * p.y() / p.z() + intr.cy};
  };

  std::vector<Projected> proj(mesh.triangles.size());
  parallel_for(exec, static_cast<std::int64_t>(mesh.triangles.size()), [&](std::int64_t t) {
    const auto& tri = mesh.triangles[t];
    Projected& pr = proj[t];
    pr.a = pose.world_to_camera(mesh.vertices[tri[0]]);
    pr.b = pose.world_to_camera(mesh.vertices[tri[1]]);
    pr.c = pose.world_to_camera(mesh.vertices[tri[2]]);
    // Sutherland-Hodgman against z >= kNear.
    const Vec3 in[3] = {pr.a, pr.b, pr.c};
    Vec3 clipped[4];
    int n = 0;
    for (int e = 0; e < 3; ++e) {
      const Vec3& p = in[e];
      const Vec3& q = in[(e + 1) % 3];
      const bool pin = p.z() >= kNear, qin = q.z() >= kNear;
      if (pin) clipped[n++] = p;
      if (pin != qin) clipped[n++] = p + (kNear - p.z()) / (q.z() - p.z()) * (q - p);
    }
    pr.count = n;
    if (n < 3) return;
    for (int i = 0; i < n; ++i) pr.poly[i] = to_pixel(clipped[i]);
    // Edge-on triangles cover no pixel area.
    double area = 0.0;
    for (int i = 0; i < n; ++i) area += edge(pr.poly[0], pr.poly[i], pr.poly[(i + 1) % n][0], pr.poly[(i + 1) % n][1]);
    if (std::abs(area) < 1e-12) {
      pr.count = 0;
      return;
    }
    double u0 = std::numeric_limits<double>::infinity(), u1 = -u0, v0 = u0, v1 = -u0;
    for (int i = 0; i < n; ++i) {
      u0 = std::min(u0, pr.poly[i][0]);
      u1 = std::max(u1, pr.poly[i][0]);
      v0 = std::min(v0, pr.poly[i][1]);
      v1 = std::max(v1, pr.poly[i][1]);
    }
    // Pixel centres sit at integer coordinates.
    pr.umin = static_cast<int>(std::max(0.0, std::ceil(u0)));
    pr.umax = static_cast<int>(std::min<double>(intr.width - 1, std::floor(u1)));
    pr.vmin = static_cast<int>(std::max(0.0, std::ceil(v0)));
    pr.vmax = static_cast<int>(std::min<double>(intr.height - 1, std::floor(v1)));
  });

  const int bands = (intr.height + kBandRows - 1) / kBandRows;
  std::vector<std::vector<std::uint32_t>> band_tris(static_cast<std::size_t>(bands));
  for (std::uint32_t t = 0; t < proj.size(); ++t) {
    const Projected& pr = proj[t];
    if (pr.count < 3 || pr.umin > pr.umax || pr.vmin > pr.vmax) continue;
    for (int b = pr.vmin / kBandRows; b <= pr.vmax / kBandRows; ++b) band_tris[b].push_back(t);
  }

  parallel_for(
      exec, bands,
      [&](std::int64_t b) {
        const int row0 = static_cast<int>(b) * kBandRows;
        const int row1 = std::min(intr.height - 1, row0 + kBandRows - 1);
        for (const std::uint32_t t : band_tris[b]) {
          const Projected& pr = proj[t];
          const Vec3 n = (pr.b - pr.a).cross(pr.c - pr.a);
          const double na = n.dot(pr.a);
          for (int v = std::max(row0, pr.vmin); v <= std::min(row1, pr.vmax); ++v) {
            for (int u = pr.umin; u <= pr.umax; ++u) {
              if (!covers(pr, u, v)) continue;
              const Vec3 ray = intr.pixel_ray(u, v);
              const double denom = n.dot(ray);
              if (denom == 0.0) continue;
              const double range = na / denom;
              if (!(range > 0.0) || !std::isfinite(range)) continue;
              double& d = map.depth[static_cast<std::size_t>(v) * intr.width + u];
              if (d == 0.0 || range < d) d = range;
            }
          }
        }
      },
      1);
  return map;
}

void write_depth_pgm(const std::filesystem::path& path, const DepthMap& map) {
  auto out = io::open_for_write(path, true);
  out << "P5\n" << map.intrinsics.width << ' ' << map.intrinsics.height << "\n65535\n";
  std::vector<unsigned char> buf(map.depth.size() * 2);
  for (std::size_t i = 0; i < map.depth.size(); ++i) {
    const double units = std::round(map.depth[i] / kPgmMillimetresPerUnit);
    const auto q = static_cast<std::uint16_t>(std::clamp(units, 0.0, 65535.0));
    buf[2 * i] = static_cast<unsigned char>(q >> 8);
    buf[2 * i + 1] = static_cast<unsigned char>(q & 0xFF);
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

void write_depth_raw(const std::filesystem::path& path, const DepthMap& map) {
  auto out = io::open_for_write(path, true);
  std::vector<unsigned char> buf(map.depth.size() * 4);
  for (std::size_t i = 0; i < map.depth.size(); ++i) {
    std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(map.depth[i]));
    for (int b = 0; b < 4; ++b) buf[4 * i + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace depthforge
