#pragma once

#include "depthforge/types.hpp"

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <span>
#include <string>

namespace depthforge::io {

// PLY (ASCII 1.0). Vertices carry x y z, optionally nx ny nz and an integer
// source_frame; faces use a `vertex_indices` list (polygons are fanned into
// triangles on read). Unknown properties are skipped. Binary PLY is rejected.
PointCloud read_ply_cloud(const std::filesystem::path& path);
PointCloud parse_ply_cloud(std::istream& in, const std::string& name);
TriangleMesh read_ply_mesh(const std::filesystem::path& path);
TriangleMesh parse_ply_mesh(std::istream& in, const std::string& name);

void write_ply_cloud(const std::filesystem::path& path, const PointCloud& cloud);
void write_ply_cloud(std::ostream& out, const PointCloud& cloud);
/// `vertex_scalar`, when non-empty, is written as a per-vertex double
/// property called `scalar_name`.
void write_ply_mesh(const std::filesystem::path& path, const TriangleMesh& mesh,
                    std::span<const double> vertex_scalar = {}, const std::string& scalar_name = "distance");
void write_ply_mesh(std::ostream& out, const TriangleMesh& mesh, std::span<const double> vertex_scalar = {},
                    const std::string& scalar_name = "distance");

// Trajectory CSV: header `frame,tx,ty,tz,qx,qy,qz,qw`, one pose per row,
// millimetres, Hamilton quaternion with w last (camera-to-world).
Trajectory read_trajectory_csv(const std::filesystem::path& path);
Trajectory parse_trajectory_csv(std::istream& in, const std::string& name);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);

// Intrinsics JSON: {"fx":..,"fy":..,"cx":..,"cy":..,"width":..,"height":..}
CameraIntrinsics read_intrinsics_json(const std::filesystem::path& path);
void write_intrinsics_json(const std::filesystem::path& path, const CameraIntrinsics& intr);

/// Creates parent directories and opens for writing; throws IoError.
std::ofstream open_for_write(const std::filesystem::path& path, bool binary = false);

}  // namespace depthforge::io
