#pragma once

#include "depthforge/parallel.hpp"
#include "depthforge/types.hpp"

#include <optional>
#include <span>
#include <vector>

namespace depthforge {

/// Gaussian kernel exp(-d^2 / h^2).
struct KernelSpec {
  double bandwidth = 1.0;  ///< h, mm

  double weight(double distance_sq) const { return std::exp(-distance_sq / (bandwidth * bandwidth)); }
};

struct MlsParams {
  KernelSpec kernel;
  int degree = 2;        ///< polynomial degree, 1..3
  std::size_t k = 12;    ///< neighbourhood size, at least the number of polynomial terms

  static std::size_t term_count(int degree) { return static_cast<std::size_t>((degree + 1) * (degree + 2) / 2); }
  void validate() const;
};

/// Local reference plane {x : x.n = D} through the projection q of the query
/// point, with tangent axes (u, v) and the fitted height polynomial g(u, v).
/// Polynomial coefficients are for the monomials u^i v^j (i + j <= degree)
/// in graded order 1, u, v, u^2, uv, v^2, ... with u, v expressed in units
/// of the kernel bandwidth.
struct MlsLocalFrame {
  Vec3 origin;        ///< q
  Vec3 normal;        ///< n
  double offset = 0;  ///< D
  Vec3 u_axis;
  Vec3 v_axis;
  std::vector<double> coeffs;
  int plane_iterations = 0;

  /// Projection onto the local polynomial surface: q + g(0,0) n.
  Vec3 projected_point() const { return origin + coeffs.at(0) * normal; }
};

/// Fits the local frame for `query` over `neighbors`. Returns nullopt when
/// fewer than term_count neighbours carry weight > 1e-12 or the polynomial
/// system is rank deficient.
std::optional<MlsLocalFrame> fit_local_frame(const Vec3& query, std::span<const Vec3> neighbors,
                                             const MlsParams& params);

struct MlsReport {
  std::size_t failures = 0;         ///< points passed through unchanged
  double mean_displacement = 0.0;   ///< mm, over all points
};

struct MlsResult {
  PointCloud cloud;
  MlsReport report;
};

/// Unoriented PCA normals from the k nearest neighbours (point included).
/// Rank-deficient neighbourhoods are marked in `normal_reliable`.
PointCloud estimate_normals(const PointCloud& cloud, std::size_t k, Exec exec = Exec::Parallel);

/// Flips each normal to face the camera that observed the point. Points
/// without provenance use the spatially nearest camera centre; provenance not
/// present in the trajectory falls back to the nearest frame id.
PointCloud orient_normals(const PointCloud& cloud, const Trajectory& trajectory);

/// Flips normals to point away from the cloud centroid (used when no
/// trajectory is available).
PointCloud orient_normals_outward(const PointCloud& cloud);

/// Moving least squares projection of every point onto its local polynomial
/// surface. Output has the same size and order as the input.
MlsResult mls_project(const PointCloud& cloud, const MlsParams& params, Exec exec = Exec::Parallel);

/// Default bandwidth: 4x the median nearest-neighbour spacing.
double default_mls_bandwidth(const PointCloud& cloud);

}  // namespace depthforge
