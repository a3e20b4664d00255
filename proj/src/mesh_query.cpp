#include "depthforge/mesh_query.hpp"

#include "depthforge/error.hpp"

#include <algorithm>
#include <utility>

namespace depthforge {
namespace {

constexpr std::uint32_t kLeafTriangles = 4;

double box_distance_sq(const Aabb& box, const Vec3& c) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double d = std::max({box.min[a] - c[a], c[a] - box.max[a], 0.0});
    d2 += d * d;
  }
  return d2;
}

bool ray_hits_box(const Aabb& box, const Vec3& origin, const Vec3& inv_dir, double t_min, double t_max) {
  for (int a = 0; a < 3; ++a) {
    double t0 = (box.min[a] - origin[a]) * inv_dir[a];
    double t1 = (box.max[a] - origin[a]) * inv_dir[a];
    if (t0 > t1) std::swap(t0, t1);
    // NaN from 0*inf (origin on a slab plane with a parallel ray) keeps the box.
    if (!(t0 <= t1)) continue;
    t_min = std::max(t_min, t0);
    t_max = std::min(t_max, t1);
    if (t_min > t_max * (1.0 + 1e-12) + 1e-12) return false;
  }
  return true;
}

}  // namespace

Vec3 closest_point_on_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
  // Region classification by barycentric sign tests (Ericson, RTCD 5.1.5).
  const Vec3 ab = b - a;
  const Vec3 ac = c - a;
  const Vec3 ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Vec3 bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + (d1 / (d1 - d3)) * ab;

  const Vec3 cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + (d2 / (d2 - d6)) * ac;

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b);
  }

  const double denom = 1.0 / (va + vb + vc);
  return a + ab * (vb * denom) + ac * (vc * denom);
}

MeshBvh::MeshBvh(const TriangleMesh& mesh) : mesh_(mesh) {
  const auto n = static_cast<std::uint32_t>(mesh_.triangles.size());
  order_.resize(n);
  std::vector<Vec3> centroids(n);
  for (std::uint32_t t = 0; t < n; ++t) {
    order_[t] = t;
    const auto& tri = mesh_.triangles[t];
    centroids[t] = (mesh_.vertices[tri[0]] + mesh_.vertices[tri[1]] + mesh_.vertices[tri[2]]) / 3.0;
  }
  if (n > 0) {
    nodes_.reserve(2 * n / kLeafTriangles + 2);
    build(0, n, centroids);
  }
}

std::int32_t MeshBvh::build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3>& centroids) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box;
  Aabb cbox;
  for (std::uint32_t i = begin; i < end; ++i) {
    const auto& tri = mesh_.triangles[order_[i]];
    for (auto v : tri) box.extend(mesh_.vertices[v]);
    cbox.extend(centroids[order_[i]]);
  }
  nodes_[id].box = box;
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafTriangles) return id;

  int axis = 0;
  cbox.extent().maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = centroids[a][axis];
                     const double cb = centroids[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const auto left = build(begin, mid, centroids);
  const auto right = build(mid, end, centroids);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

ClosestPoint MeshBvh::closest_point(const Vec3& p) const {
  if (nodes_.empty()) throw PreconditionError("closest-point query on an empty mesh");
  ClosestPoint best;
  best.distance_sq = std::numeric_limits<double>::infinity();
  std::vector<std::pair<double, std::int32_t>> stack{{box_distance_sq(nodes_[0].box, p), 0}};
  while (!stack.empty()) {
    const auto [bd, id] = stack.back();
    stack.pop_back();
    if (bd > best.distance_sq) continue;
    const Node& node = nodes_[id];
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t t = order_[i];
        const auto& tri = mesh_.triangles[t];
        const Vec3 c = closest_point_on_triangle(p, mesh_.vertices[tri[0]], mesh_.vertices[tri[1]],
                                                 mesh_.vertices[tri[2]]);
        const double d2 = squared_distance(p, c);
        if (d2 < best.distance_sq || (d2 == best.distance_sq && t < best.triangle)) {
          best = {c, d2, t};
        }
      }
    } else {
      const double dl = box_distance_sq(nodes_[node.left].box, p);
      const double dr = box_distance_sq(nodes_[node.right].box, p);
      if (dl <= dr) {
        stack.emplace_back(dr, node.right);
        stack.emplace_back(dl, node.left);
      } else {
        stack.emplace_back(dl, node.left);
        stack.emplace_back(dr, node.right);
      }
    }
  }
  return best;
}

std::optional<RayHit> MeshBvh::raycast(const Vec3& origin, const Vec3& dir, double t_min, double t_max) const {
  std::optional<RayHit> best;
  if (nodes_.empty()) return best;
  const Vec3 inv_dir(1.0 / dir.x(), 1.0 / dir.y(), 1.0 / dir.z());
  constexpr double kEdgeEps = 1e-12;
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    const double limit = best ? best->t : t_max;
    if (!ray_hits_box(node.box, origin, inv_dir, t_min, limit)) continue;
    if (node.left >= 0) {
      stack.push_back(node.left);
      stack.push_back(node.right);
      continue;
    }
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t t = order_[i];
      const auto& tri = mesh_.triangles[t];
      const Vec3& a = mesh_.vertices[tri[0]];
      const Vec3 e1 = mesh_.vertices[tri[1]] - a;
      const Vec3 e2 = mesh_.vertices[tri[2]] - a;
      const Vec3 pvec = dir.cross(e2);
      const double det = e1.dot(pvec);
      if (std::abs(det) < 1e-300) continue;
      const double inv_det = 1.0 / det;
      const Vec3 tvec = origin - a;
      const double u = tvec.dot(pvec) * inv_det;
      if (u < -kEdgeEps || u > 1.0 + kEdgeEps) continue;
      const Vec3 qvec = tvec.cross(e1);
      const double v = dir.dot(qvec) * inv_det;
      if (v < -kEdgeEps || u + v > 1.0 + kEdgeEps) continue;
      const double dist = e2.dot(qvec) * inv_det;
      if (dist <= t_min || dist > t_max) continue;
      if (!best || dist < best->t || (dist == best->t && t < best->triangle)) {
        const double w = 1.0 - u - v;
        best = RayHit{dist, w * a + u * mesh_.vertices[tri[1]] + v * mesh_.vertices[tri[2]], t};
      }
    }
  }
  return best;
}

}  // namespace depthforge
