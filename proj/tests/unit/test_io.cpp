#include "depthforge/error.hpp"
#include "depthforge/io.hpp"

#include "support.hpp"

#include <doctest.h>

#include <sstream>

using namespace depthforge;
using namespace testsupport;

namespace {

std::size_t parse_error_line(const std::string& text, bool mesh = false) {
  std::istringstream in(text);
  try {
    if (mesh) {
      io::parse_ply_mesh(in, "t.ply");
    } else {
      io::parse_ply_cloud(in, "t.ply");
    }
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

std::size_t csv_error_line(const std::string& text) {
  std::istringstream in(text);
  try {
    io::parse_trajectory_csv(in, "t.csv");
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

const std::string kHeader = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n";

}  // namespace

TEST_CASE("PLY cloud round trip keeps normals and provenance exactly") {
  PointCloud c = sphere_cloud(50, 12.5, 0.3, 8);
  for (std::size_t i = 0; i < c.size(); ++i) c.source_frame.push_back(static_cast<std::int64_t>(i / 5));
  std::stringstream ss;
  io::write_ply_cloud(ss, c);
  const PointCloud back = io::parse_ply_cloud(ss, "mem");
  REQUIRE(back.size() == c.size());
  for (std::size_t i = 0; i < c.size(); ++i) {
    CHECK(back.points[i] == c.points[i]);
    CHECK((back.normals[i] - c.normals[i]).norm() < 1e-15);
    CHECK(back.source_frame[i] == c.source_frame[i]);
  }
}

TEST_CASE("PLY mesh round trip and polygon fan triangulation") {
  const TriangleMesh m = plane_mesh(3.0, 1.5, 3);
  const auto dir = scratch_dir("io_mesh");
  io::write_ply_mesh(dir / "m.ply", m);
  const TriangleMesh back = io::read_ply_mesh(dir / "m.ply");
  CHECK(back.vertices == m.vertices);
  CHECK(back.triangles == m.triangles);

  std::istringstream quad(
      "ply\nformat ascii 1.0\nelement vertex 4\nproperty double x\nproperty double y\nproperty double z\n"
      "element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n");
  const TriangleMesh q = io::parse_ply_mesh(quad, "quad");
  REQUIRE(q.triangles.size() == 2);
  CHECK(q.triangles[0] == Triangle{0, 1, 2});
  CHECK(q.triangles[1] == Triangle{0, 2, 3});
}

TEST_CASE("PLY scalar property is written per vertex") {
  const TriangleMesh m = plane_mesh(1.0, 0.0, 1);
  std::vector<double> s{0.5, -1.0, 2.0, 3.25};
  std::stringstream ss;
  io::write_ply_mesh(ss, m, s, "distance");
  const std::string text = ss.str();
  CHECK(text.find("property double distance") != std::string::npos);
  CHECK(text.find(" 3.25\n") != std::string::npos);
  ss.seekg(0);
  CHECK(io::parse_ply_mesh(ss, "mem").vertices.size() == 4);
  CHECK_THROWS_AS(io::write_ply_mesh(ss, m, std::vector<double>{1.0}), ParameterError);
}

TEST_CASE("PLY parser rejects bad data with line numbers") {
  CHECK(parse_error_line(kHeader + "0 0 0\nnan 1 2\n") == 9);
  CHECK(parse_error_line(kHeader + "0 0 0\n1 inf 2\n") == 9);
  CHECK(parse_error_line(kHeader + "0 0 0\n") == 9);            // too few vertices
  CHECK(parse_error_line(kHeader + "0 0 0\n1 2 3\n4 5 6\n") == 10);  // trailing data
  CHECK(parse_error_line(kHeader + "0 0\n1 2 3\n") == 8);        // short row
  CHECK(parse_error_line(kHeader + "0 0 0 7\n1 2 3\n") == 8);    // long row
  CHECK(parse_error_line(kHeader + "0 0 x\n1 2 3\n") == 8);
  CHECK(parse_error_line("ply\nformat binary_little_endian 1.0\n") == 2);
  CHECK(parse_error_line("plx\n") == 1);
  const std::string face_hdr =
      "ply\nformat ascii 1.0\nelement vertex 3\nproperty double x\nproperty double y\nproperty double z\n"
      "element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n";
  CHECK(parse_error_line(face_hdr + "3 0 1 5\n", true) == 13);
  CHECK(parse_error_line(face_hdr + "3 0 1 1\n", true) == 13);
  CHECK(parse_error_line(face_hdr + "3 0 1 2\n", true) == 0);
}

TEST_CASE("PLY normals are renormalised, zero normals rejected") {
  std::istringstream in(
      "ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nproperty double y\nproperty double z\n"
      "property double nx\nproperty double ny\nproperty double nz\nend_header\n0 0 0 0 0 2\n");
  const PointCloud c = io::parse_ply_cloud(in, "n");
  CHECK(c.normals[0] == Vec3(0, 0, 1));
  std::istringstream zero(
      "ply\nformat ascii 1.0\nelement vertex 1\nproperty double x\nproperty double y\nproperty double z\n"
      "property double nx\nproperty double ny\nproperty double nz\nend_header\n0 0 0 0 0 0\n");
  CHECK_THROWS_AS(io::parse_ply_cloud(zero, "z"), ParseError);
}

TEST_CASE("missing files raise IoError") {
  CHECK_THROWS_AS(io::read_ply_cloud("/nonexistent/x.ply"), IoError);
  CHECK_THROWS_AS(io::read_trajectory_csv("/nonexistent/x.csv"), IoError);
  CHECK_THROWS_AS(io::read_intrinsics_json("/nonexistent/x.json"), IoError);
}

TEST_CASE("trajectory CSV round trip") {
  Trajectory t;
  for (int f = 0; f < 5; ++f) {
    CameraPose p;
    p.frame_id = 10 + 3 * f;
    p.rotation = Quat(Eigen::AngleAxisd(0.1 * f, Vec3(1, 2, 3).normalized()));
    p.translation = Vec3(f * 1.5, -f, 0.25);
    t.poses.push_back(p);
  }
  std::stringstream ss;
  io::write_trajectory_csv(ss, t);
  CHECK(ss.str().rfind("frame,tx,ty,tz,qx,qy,qz,qw\n", 0) == 0);
  const Trajectory back = io::parse_trajectory_csv(ss, "mem");
  REQUIRE(back.size() == t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(back.poses[i].frame_id == t.poses[i].frame_id);
    CHECK(back.poses[i].translation == t.poses[i].translation);
    CHECK(back.poses[i].rotation.coeffs().isApprox(t.poses[i].rotation.coeffs(), 1e-15));
  }
}

TEST_CASE("trajectory CSV rejects malformed rows with line numbers") {
  const std::string h = "frame,tx,ty,tz,qx,qy,qz,qw\n";
  CHECK(csv_error_line("frame,x,y,z,qx,qy,qz,qw\n") == 1);
  CHECK(csv_error_line(h + "0,0,0,0,0,0,0,1\n1,0,nan,0,0,0,0,1\n") == 3);
  CHECK(csv_error_line(h + "0,0,0,0,0,0,0,1\n1,0,0,0,0,0,1\n") == 3);
  CHECK(csv_error_line(h + "0,0,0,0,0,0,0,1\n0,0,0,0,0,0,0,1\n") == 3);
  CHECK(csv_error_line(h + "0,0,0,0,0,0,0,2\n") == 2);
  CHECK(csv_error_line(h + "0,0,0,0,0,0,0,1\n5,1,2,3,0,0,0,1\n") == 0);
}

TEST_CASE("intrinsics JSON round trip") {
  const auto dir = scratch_dir("io_intr");
  CameraIntrinsics k;
  k.fx = 650.5;
  k.cy = 300;
  io::write_intrinsics_json(dir / "k.json", k);
  const CameraIntrinsics back = io::read_intrinsics_json(dir / "k.json");
  CHECK(back.fx == 650.5);
  CHECK(back.cy == 300);
  CHECK(back.width == 1024);
}
