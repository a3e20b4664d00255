#pragma once

#include "depthforge/parallel.hpp"
#include "depthforge/types.hpp"

#include <filesystem>
#include <vector>

namespace depthforge {

/// Per-pixel range (mm) from the camera centre to the nearest surface along
/// the pixel ray; 0 marks pixels with no coverage. Row-major, width fastest.
struct DepthMap {
  CameraIntrinsics intrinsics;
  CameraPose pose;
  std::vector<double> depth;

  double at(int u, int v) const { return depth[static_cast<std::size_t>(v) * intrinsics.width + u]; }
  std::size_t covered() const;
};

/// Depth-buffer rasterisation of `mesh` seen from `pose`. Triangles are
/// clipped at a near plane in front of the camera; each covered pixel stores
/// the exact ray/triangle-plane distance of its nearest triangle.
DepthMap rasterize_depth(const TriangleMesh& mesh, const CameraIntrinsics& intr, const CameraPose& pose,
                         Exec exec = Exec::Parallel);

/// Depth quantisation of the PGM output.
inline constexpr double kPgmMillimetresPerUnit = 0.1;

/// 16-bit binary PGM (P5, maxval 65535, big-endian), 0.1 mm per unit,
/// saturating at 65535.
void write_depth_pgm(const std::filesystem::path& path, const DepthMap& map);
/// Raw little-endian float32 depths in millimetres, row-major, no header.
void write_depth_raw(const std::filesystem::path& path, const DepthMap& map);

}  // namespace depthforge
