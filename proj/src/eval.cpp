#include "depthforge/eval.hpp"

#include "depthforge/alignment.hpp"
#include "depthforge/error.hpp"
#include "depthforge/io.hpp"
#include "depthforge/transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace depthforge {
namespace {

double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  return m;
}

/// Linear-interpolated percentile of sorted values.
double percentile(const std::vector<double>& sorted, double q) {
  if (sorted.size() == 1) return sorted[0];
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double f = pos - static_cast<double>(lo);
  return sorted[lo] + f * (sorted[hi] - sorted[lo]);
}

/// Height of the plane of triangle `t` above (x, y).
double plane_height(const TriangleMesh& mesh, std::uint32_t t, double x, double y, double fallback) {
  const auto& tri = mesh.triangles[t];
  const Vec3& a = mesh.vertices[tri[0]];
  const Vec3 n = (mesh.vertices[tri[1]] - a).cross(mesh.vertices[tri[2]] - a);
  if (std::abs(n.z()) < 1e-300) return fallback;
  return a.z() - (n.x() * (x - a.x()) + n.y() * (y - a.y())) / n.z();
}

}  // namespace

void IcpParams::validate() const {
  if (max_iterations < 1) throw ParameterError("ICP needs at least one iteration");
  if (!(tolerance >= 0.0)) throw ParameterError("ICP tolerance must be non-negative");
  if (!(reject_factor > 0.0)) throw ParameterError("ICP rejection factor must be positive");
  initial.validate();
  if (std::abs(initial.scale - 1.0) > 1e-12) throw ParameterError("ICP initial transform must be rigid");
}

IcpResult icp_align(std::span<const Vec3> source, const MeshBvh& target, const IcpParams& params, Exec exec) {
  params.validate();
  if (source.empty()) throw PreconditionError("ICP source is empty");
  if (target.mesh().empty()) throw PreconditionError("ICP target mesh is empty");
  const std::size_t n = source.size();
  std::vector<Vec3> moved(n), closest(n);
  std::vector<double> dist(n);
  std::vector<Vec3> src_in, dst_in;

  IcpResult result;
  result.transform = params.initial;

  // Correspondences at the current transform; fills src_in/dst_in and
  // returns the inlier RMS.
  auto correspond = [&]() {
    parallel_for(exec, static_cast<std::int64_t>(n), [&](std::int64_t i) {
      moved[i] = result.transform.apply(source[i]);
      const ClosestPoint cp = target.closest_point(moved[i]);
      closest[i] = cp.point;
      dist[i] = std::sqrt(cp.distance_sq);
    });
    const double threshold = params.reject_factor * median_of(dist);
    src_in.clear();
    dst_in.clear();
    double sum_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (dist[i] <= threshold) {
        src_in.push_back(moved[i]);
        dst_in.push_back(closest[i]);
        sum_sq += dist[i] * dist[i];
      }
    }
    if (src_in.size() < 3) throw PreconditionError("ICP found no correspondences within the rejection threshold");
    result.inliers = src_in.size();
    return std::sqrt(sum_sq / static_cast<double>(src_in.size()));
  };

  double rms = correspond();
  for (int it = 1; it <= params.max_iterations; ++it) {
    const SimilarityTransform step = rigid_fit(src_in, dst_in);
    result.transform = compose(step, result.transform);
    result.transform.scale = 1.0;
    result.iterations = it;
    const double next = correspond();
    const double change = std::abs(rms - next);
    rms = next;
    if (change < params.tolerance) {
      result.converged = true;
      break;
    }
  }
  result.rms = rms;
  return result;
}

IcpResult icp_align(std::span<const Vec3> source, const TriangleMesh& target, const IcpParams& params, Exec exec) {
  if (target.empty()) throw PreconditionError("ICP target mesh is empty");
  const MeshBvh bvh(target);
  return icp_align(source, bvh, params, exec);
}

std::size_t HeightGrid::valid_count() const {
  return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
}

RmsdResult surface_rmsd(const TriangleMesh& recon, const TriangleMesh& gt, int m, int n, Exec exec) {
  if (m < 1 || n < 1) throw ParameterError("RMSD grid needs m, n >= 1");
  if (recon.empty() || gt.empty()) throw PreconditionError("RMSD needs two non-empty meshes");
  const Aabb ra = bounding_box(recon.vertices);
  const Aabb ga = bounding_box(gt.vertices);
  const double x0 = std::max(ra.min.x(), ga.min.x()), x1 = std::min(ra.max.x(), ga.max.x());
  const double y0 = std::max(ra.min.y(), ga.min.y()), y1 = std::min(ra.max.y(), ga.max.y());
  if (!(x1 > x0) || !(y1 > y0)) throw PreconditionError("mesh footprints do not overlap in xy");
  const double top = std::max(ra.max.z(), ga.max.z()) + 1.0;

  RmsdResult result;
  HeightGrid& g = result.grid;
  g.m = m;
  g.n = n;
  for (int i = 0; i < m; ++i) g.x.push_back(x0 + (i + 0.5) * (x1 - x0) / m);
  for (int j = 0; j < n; ++j) g.y.push_back(y0 + (j + 0.5) * (y1 - y0) / n);
  const std::size_t count = static_cast<std::size_t>(m) * static_cast<std::size_t>(n);
  g.gt_height.assign(count, 0.0);
  g.recon_height.assign(count, 0.0);
  g.valid.assign(count, 0);

  const MeshBvh recon_bvh(recon), gt_bvh(gt);
  const Vec3 down(0.0, 0.0, -1.0);
  parallel_for(exec, n, [&](std::int64_t j) {
    for (int i = 0; i < m; ++i) {
      const std::size_t id = static_cast<std::size_t>(j) * m + i;
      const Vec3 origin(g.x[i], g.y[j], top);
      const auto hg = gt_bvh.raycast(origin, down);
      const auto hr = recon_bvh.raycast(origin, down);
      if (!hg || !hr) continue;
      g.gt_height[id] = plane_height(gt, hg->triangle, g.x[i], g.y[j], hg->point.z());
      g.recon_height[id] = plane_height(recon, hr->triangle, g.x[i], g.y[j], hr->point.z());
      g.valid[id] = 1;
    }
  }, 1);

  double sum_sq = 0.0;
  for (std::size_t id = 0; id < count; ++id) {
    if (!g.valid[id]) continue;
    const double d = g.gt_height[id] - g.recon_height[id];
    sum_sq += d * d;
    ++result.valid;
  }
  result.invalid = count - result.valid;
  if (result.valid == 0) throw PreconditionError("no RMSD sample hit both surfaces");
  result.rmsd = std::sqrt(sum_sq / static_cast<double>(result.valid));
  return result;
}

double DistanceReport::mode() const {
  if (counts.empty()) return 0.0;
  const auto it = std::max_element(counts.begin(), counts.end());
  const auto b = static_cast<std::size_t>(it - counts.begin());
  return 0.5 * (bin_edges[b] + bin_edges[b + 1]);
}

DistanceReport distance_report(const TriangleMesh& recon, const TriangleMesh& gt, int bins, Exec exec) {
  if (bins < 1) throw ParameterError("histogram needs at least one bin");
  if (recon.vertices.empty() || gt.empty()) throw PreconditionError("distance report needs two non-empty meshes");
  const MeshBvh bvh(gt);
  DistanceReport rep;
  const std::size_t nv = recon.vertices.size();
  rep.distances.resize(nv);
  parallel_for(exec, static_cast<std::int64_t>(nv), [&](std::int64_t i) {
    const Vec3& p = recon.vertices[i];
    const ClosestPoint cp = bvh.closest_point(p);
    const double d = std::sqrt(cp.distance_sq);
    rep.distances[i] = (p - cp.point).dot(gt.face_normal(cp.triangle)) < 0.0 ? -d : d;
  });

  std::vector<double> sorted = rep.distances;
  std::sort(sorted.begin(), sorted.end());
  DistanceSummary& s = rep.summary;
  s.min = sorted.front();
  s.max = sorted.back();
  double sum = 0.0, sum_sq = 0.0;
  for (double d : rep.distances) {
    sum += d;
    sum_sq += d * d;
  }
  s.mean = sum / static_cast<double>(nv);
  s.rms = std::sqrt(sum_sq / static_cast<double>(nv));
  s.p05 = percentile(sorted, 0.05);
  s.p50 = percentile(sorted, 0.50);
  s.p95 = percentile(sorted, 0.95);

  const double width = (s.max - s.min) / bins;
  rep.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int b = 0; b <= bins; ++b) rep.bin_edges[b] = s.min + b * width;
  rep.bin_edges.back() = s.max;
  rep.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double d : rep.distances) {
    int b = width > 0.0 ? static_cast<int>((d - s.min) / width) : 0;
    b = std::clamp(b, 0, bins - 1);
    ++rep.counts[static_cast<std::size_t>(b)];
  }
  return rep;
}

void write_distance_ply(const std::filesystem::path& path, const TriangleMesh& recon, const DistanceReport& report) {
  io::write_ply_mesh(path, recon, report.distances, "distance");
}

std::vector<std::pair<std::size_t, std::size_t>> associate_frames(const Trajectory& est, const Trajectory& gt) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  std::size_t i = 0, j = 0;
  while (i < est.size() && j < gt.size()) {
    const auto a = est.poses[i].frame_id, b = gt.poses[j].frame_id;
    if (a == b) {
      pairs.emplace_back(i++, j++);
    } else if (a < b) {
      ++i;
    } else {
      ++j;
    }
  }
  return pairs;
}

TrajectoryAlignment align_trajectories(const Trajectory& est, const Trajectory& gt) {
  const auto pairs = associate_frames(est, gt);
  if (pairs.size() < 3) {
    throw PreconditionError("trajectory alignment needs at least 3 common frame ids, got " +
                            std::to_string(pairs.size()));
  }
  std::vector<Vec3> src, dst;
  src.reserve(pairs.size());
  dst.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    src.push_back(est.poses[i].translation);
    dst.push_back(gt.poses[j].translation);
  }
  TrajectoryAlignment out;
  out.transform = umeyama(src, dst, true);
  out.matched = pairs.size();
  out.unmatched_est = est.size() - pairs.size();
  out.unmatched_gt = gt.size() - pairs.size();
  return out;
}

double trajectory_rmse(const Trajectory& est, const Trajectory& gt, const SimilarityTransform& t) {
  const auto pairs = associate_frames(est, gt);
  if (pairs.empty()) throw PreconditionError("trajectories share no frame ids");
  double sum_sq = 0.0;
  for (const auto& [i, j] : pairs) sum_sq += (t.apply(est.poses[i].translation) - gt.poses[j].translation).squaredNorm();
  return std::sqrt(sum_sq / static_cast<double>(pairs.size()));
}

}  // namespace depthforge
