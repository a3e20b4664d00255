#pragma once

#include "depthforge/mesh_query.hpp"
#include "depthforge/parallel.hpp"
#include "depthforge/types.hpp"

#include <filesystem>
#include <span>
#include <vector>

namespace depthforge {

// ---------------------------------------------------------------------------
// ICP

struct IcpParams {
  int max_iterations = 50;
  double tolerance = 1e-6;       ///< stop when the RMS changes by less (mm)
  double reject_factor = 3.0;    ///< pairs beyond factor * median distance are dropped
  SimilarityTransform initial;   ///< starting guess, scale must be 1

  void validate() const;
};

struct IcpResult {
  SimilarityTransform transform;  ///< maps source onto target, scale 1
  double rms = 0.0;               ///< over inlier pairs at the final transform
  int iterations = 0;
  bool converged = false;
  std::size_t inliers = 0;
};

/// Trimmed point-to-point ICP of `source` points against the surface of
/// `target`.
IcpResult icp_align(std::span<const Vec3> source, const MeshBvh& target, const IcpParams& params = {},
                    Exec exec = Exec::Parallel);
IcpResult icp_align(std::span<const Vec3> source, const TriangleMesh& target, const IcpParams& params = {},
                    Exec exec = Exec::Parallel);

// ---------------------------------------------------------------------------
// Surface RMSD

/// Heights sampled on an m x n grid at cell centres of the xy footprint
/// intersection. Row-major with x fastest: entry (i, j) is at j * m + i.
struct HeightGrid {
  int m = 0;
  int n = 0;
  std::vector<double> x;  ///< m sample abscissae
  std::vector<double> y;  ///< n sample ordinates
  std::vector<double> gt_height;     ///< Z
  std::vector<double> recon_height;  ///< z
  std::vector<std::uint8_t> valid;   ///< both surfaces hit

  std::size_t valid_count() const;
};

struct RmsdResult {
  double rmsd = 0.0;
  std::size_t valid = 0;
  std::size_t invalid = 0;
  HeightGrid grid;
};

/// sqrt(sum (Z - z)^2 / valid) where each height is the topmost surface hit
/// of a vertical ray through the sample.
RmsdResult surface_rmsd(const TriangleMesh& recon, const TriangleMesh& gt, int m, int n, Exec exec = Exec::Parallel);

// ---------------------------------------------------------------------------
// Distance map

struct DistanceSummary {
  double mean = 0.0;
  double rms = 0.0;
  double min = 0.0;
  double max = 0.0;
  double p05 = 0.0;
  double p50 = 0.0;
  double p95 = 0.0;
};

struct DistanceReport {
  std::vector<double> distances;   ///< signed, one per recon vertex
  std::vector<double> bin_edges;   ///< bins + 1 edges over [min, max]
  std::vector<std::size_t> counts;
  DistanceSummary summary;

  /// Centre of the most populated bin (lowest bin on ties).
  double mode() const;
};

/// Signed distance of every recon vertex to the closest point on `gt`,
/// positive on the side the gt face normal points to.
DistanceReport distance_report(const TriangleMesh& recon, const TriangleMesh& gt, int bins,
                               Exec exec = Exec::Parallel);

/// Writes `recon` with the signed distances as a per-vertex scalar.
void write_distance_ply(const std::filesystem::path& path, const TriangleMesh& recon, const DistanceReport& report);

// ---------------------------------------------------------------------------
// Trajectories

struct TrajectoryAlignment {
  SimilarityTransform transform;  ///< maps est onto gt
  std::size_t matched = 0;
  std::size_t unmatched_est = 0;
  std::size_t unmatched_gt = 0;
};

/// Pairs of (est index, gt index) with equal frame ids.
std::vector<std::pair<std::size_t, std::size_t>> associate_frames(const Trajectory& est, const Trajectory& gt);

/// Sim(3) Umeyama alignment of associated camera centres.
TrajectoryAlignment align_trajectories(const Trajectory& est, const Trajectory& gt);

/// RMS translation error over associated frames after mapping est by `t`.
double trajectory_rmse(const Trajectory& est, const Trajectory& gt, const SimilarityTransform& t);

}  // namespace depthforge
