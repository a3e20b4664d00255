#include "depthforge/mls.hpp"

#include "depthforge/error.hpp"
#include "depthforge/spatial_index.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>

namespace depthforge {
namespace {

constexpr double kMinWeight = 1e-12;
constexpr double kPlaneTolerance = 1e-6;  // mm
constexpr int kMaxPlaneIterations = 20;

struct Plane {
  Vec3 normal;
  double offset;
};

/// Weighted least-squares plane: normal is the eigenvector of the weighted
/// covariance with the smallest eigenvalue, offset passes through the
/// weighted centroid.
Plane fit_weighted_plane(std::span<const Vec3> pts, std::span<const double> w) {
  double wsum = 0.0;
  Vec3 c = Vec3::Zero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    wsum += w[i];
    c += w[i] * pts[i];
  }
  c /= wsum;
  Mat3 cov = Mat3::Zero();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const Vec3 d = pts[i] - c;
    cov.noalias() += w[i] * d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
  const Vec3 n = es.eigenvectors().col(0).normalized();
  return {n, n.dot(c)};
}

void tangent_axes(const Vec3& n, Vec3& u, Vec3& v) {
  int axis = 0;
  n.cwiseAbs().minCoeff(&axis);
  u = n.cross(Vec3::Unit(axis)).normalized();
  v = n.cross(u);
}

}  // namespace

void MlsParams::validate() const {
  if (!(kernel.bandwidth > 0.0) || !std::isfinite(kernel.bandwidth)) throw ParameterError("MLS bandwidth must be positive");
  if (degree < 1 || degree > 3) throw ParameterError("MLS polynomial degree must be 1, 2 or 3");
  if (k < term_count(degree)) {
    throw ParameterError("MLS neighbourhood k=" + std::to_string(k) + " is below the " +
                         std::to_string(term_count(degree)) + " samples needed for degree " + std::to_string(degree));
  }
}

std::optional<MlsLocalFrame> fit_local_frame(const Vec3& query, std::span<const Vec3> neighbors,
                                             const MlsParams& params) {
  const std::size_t terms = MlsParams::term_count(params.degree);
  const std::size_t n = neighbors.size();
  std::vector<double> w(n);

  auto weights_at = [&](const Vec3& center) {
    std::size_t effective = 0;
    for (std::size_t i = 0; i < n; ++i) {
      w[i] = params.kernel.weight(squared_distance(neighbors[i], center));
      if (w[i] > kMinWeight) ++effective;
    }
    return effective;
  };

  MlsLocalFrame frame;
  Vec3 q = query;
  Plane plane{Vec3::UnitZ(), 0.0};
  for (int it = 1; it <= kMaxPlaneIterations; ++it) {
    if (weights_at(q) < terms) return std::nullopt;
    plane = fit_weighted_plane(neighbors, w);
    const Vec3 q_next = query - (query.dot(plane.normal) - plane.offset) * plane.normal;
    const double moved = (q_next - q).norm();
    q = q_next;
    frame.plane_iterations = it;
    if (moved < kPlaneTolerance) break;
  }
  if (weights_at(q) < terms) return std::nullopt;

  frame.origin = q;
  frame.normal = plane.normal;
  frame.offset = plane.offset;
  tangent_axes(frame.normal, frame.u_axis, frame.v_axis);

  const double inv_h = 1.0 / params.kernel.bandwidth;
  Eigen::MatrixXd a(n, terms);
  Eigen::VectorXd b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3 d = neighbors[i] - q;
    const double su = d.dot(frame.u_axis) * inv_h;
    const double sv = d.dot(frame.v_axis) * inv_h;
    const double sw = std::sqrt(w[i]);
    std::size_t col = 0;
    for (int deg = 0; deg <= params.degree; ++deg) {
      for (int j = 0; j <= deg; ++j) {
        a(i, col++) = sw * std::pow(su, deg - j) * std::pow(sv, j);
      }
    }
    b(i) = sw * d.dot(frame.normal);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  if (static_cast<std::size_t>(qr.rank()) < terms) return std::nullopt;
  const Eigen::VectorXd c = qr.solve(b);
  frame.coeffs.assign(c.data(), c.data() + c.size());
  return frame;
}

PointCloud estimate_normals(const PointCloud& cloud, std::size_t k, Exec exec) {
  if (k < 3) throw ParameterError("normal estimation needs k >= 3");
  if (cloud.size() < k) {
    throw PreconditionError("normal estimation needs at least k=" + std::to_string(k) + " points, got " +
                            std::to_string(cloud.size()));
  }
  const SpatialIndex index(cloud.points);
  PointCloud out = cloud;
  out.normals.assign(cloud.size(), Vec3::UnitZ());
  out.normal_reliable.assign(cloud.size(), 1);
  parallel_for(exec, static_cast<std::int64_t>(cloud.size()), [&](std::int64_t i) {
    const auto nbrs = index.knn_query(cloud.points[i], k);
    Vec3 c = Vec3::Zero();
    for (auto j : nbrs) c += cloud.points[j];
    c /= static_cast<double>(nbrs.size());
    Mat3 cov = Mat3::Zero();
    for (auto j : nbrs) {
      const Vec3 d = cloud.points[j] - c;
      cov.noalias() += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Mat3> es(cov);
    const Vec3 lambda = es.eigenvalues();
    out.normals[i] = es.eigenvectors().col(0).normalized();
    const bool degenerate = !(lambda[2] > 0.0) || (lambda[1] - lambda[0]) <= 1e-12 * lambda[2];
    out.normal_reliable[i] = degenerate ? 0 : 1;
  });
  return out;
}

PointCloud orient_normals(const PointCloud& cloud, const Trajectory& trajectory) {
  if (trajectory.empty()) throw PreconditionError("normal orientation needs a non-empty trajectory");
  if (!cloud.has_normals()) throw PreconditionError("normal orientation needs a cloud with normals");
  PointCloud out = cloud;
  std::vector<Vec3> centers;
  centers.reserve(trajectory.size());
  for (const auto& p : trajectory.poses) centers.push_back(p.translation);
  const SpatialIndex camera_index(centers);
  for (std::size_t i = 0; i < out.size(); ++i) {
    Vec3 camera;
    if (cloud.has_source_frame()) {
      const CameraPose* pose = trajectory.find(cloud.source_frame[i]);
      camera = pose ? pose->translation : trajectory.nearest_frame(cloud.source_frame[i]).translation;
    } else {
      camera = centers[camera_index.knn_query(cloud.points[i], 1)[0]];
    }
    if (out.normals[i].dot(camera - out.points[i]) < 0.0) out.normals[i] = -out.normals[i];
  }
  return out;
}

PointCloud orient_normals_outward(const PointCloud& cloud) {
  if (!cloud.has_normals()) throw PreconditionError("normal orientation needs a cloud with normals");
  PointCloud out = cloud;
  const Vec3 c = centroid(cloud.points);
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (out.normals[i].dot(out.points[i] - c) < 0.0) out.normals[i] = -out.normals[i];
  }
  return out;
}

MlsResult mls_project(const PointCloud& cloud, const MlsParams& params, Exec exec) {
  params.validate();
  if (cloud.size() < params.k) {
    throw PreconditionError("MLS needs at least k=" + std::to_string(params.k) + " points, got " +
                            std::to_string(cloud.size()));
  }
  const SpatialIndex index(cloud.points);
  MlsResult result;
  PointCloud& out = result.cloud;
  out = cloud;
  if (!cloud.has_normals()) out.normals.assign(cloud.size(), Vec3::UnitZ());
  std::vector<std::uint8_t> failed(cloud.size(), 0);

  parallel_for(exec, static_cast<std::int64_t>(cloud.size()), [&](std::int64_t i) {
    const Vec3& p = cloud.points[i];
    const auto nbr_idx = index.knn_query(p, params.k);
    std::vector<Vec3> nbrs;
    nbrs.reserve(nbr_idx.size());
    for (auto j : nbr_idx) nbrs.push_back(cloud.points[j]);
    const auto frame = fit_local_frame(p, nbrs, params);
    if (!frame) {
      failed[i] = 1;
      return;
    }
    out.points[i] = frame->projected_point();
    const double gu = frame->coeffs[1] / params.kernel.bandwidth;
    const double gv = frame->coeffs[2] / params.kernel.bandwidth;
    Vec3 n = (frame->normal - gu * frame->u_axis - gv * frame->v_axis).normalized();
    if (cloud.has_normals() && n.dot(cloud.normals[i]) < 0.0) n = -n;
    out.normals[i] = n;
  });

  double total = 0.0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (failed[i]) {
      ++result.report.failures;
      if (!cloud.has_normals()) {
        if (out.normal_reliable.empty()) out.normal_reliable.assign(cloud.size(), 1);
        out.normal_reliable[i] = 0;
      }
    }
    total += (out.points[i] - cloud.points[i]).norm();
  }
  result.report.mean_displacement = cloud.empty() ? 0.0 : total / static_cast<double>(cloud.size());
  return result;
}

double default_mls_bandwidth(const PointCloud& cloud) {
  const SpatialIndex index(cloud.points);
  const double spacing = median_nearest_neighbor_distance(index);
  if (!(spacing > 0.0)) throw PreconditionError("median nearest-neighbour spacing is zero; cannot derive MLS bandwidth");
  return 4.0 * spacing;
}

}  // namespace depthforge
