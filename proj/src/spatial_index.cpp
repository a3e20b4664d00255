#include "depthforge/spatial_index.hpp"

#include "depthforge/error.hpp"

#include <algorithm>
#include <queue>
#include <utility>

namespace depthforge {
namespace {

constexpr std::uint32_t kLeafSize = 8;

double box_distance_sq(const Aabb& box, const Vec3& c) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    const double lo = box.min[a] - c[a];
    const double hi = c[a] - box.max[a];
    const double d = std::max({lo, hi, 0.0});
    d2 += d * d;
  }
  return d2;
}

}  // namespace

SpatialIndex::SpatialIndex(std::span<const Vec3> points) : points_(points.begin(), points.end()) {
  order_.resize(points_.size());
  for (std::uint32_t i = 0; i < order_.size(); ++i) order_[i] = i;
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / kLeafSize + 2);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t SpatialIndex::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.emplace_back();
  Aabb box;
  for (std::uint32_t i = begin; i < end; ++i) box.extend(points_[order_[i]]);
  nodes_[id].box = box;
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafSize) return id;

  int axis = 0;
  box.extent().maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     const double ca = points_[a][axis];
                     const double cb = points_[b][axis];
                     return ca < cb || (ca == cb && a < b);
                   });
  const auto left = build(begin, mid);
  const auto right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<std::size_t> SpatialIndex::radius_query(const Vec3& center, double radius) const {
  if (!(radius > 0.0)) throw ParameterError("radius query requires a positive radius");
  std::vector<std::size_t> out;
  if (nodes_.empty()) return out;
  const double r2 = radius * radius;
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (box_distance_sq(node.box, center) > r2) continue;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = order_[i];
        if (squared_distance(points_[idx], center) <= r2) out.push_back(idx);
      }
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t SpatialIndex::radius_count(const Vec3& center, double radius, std::size_t limit) const {
  if (!(radius > 0.0)) throw ParameterError("radius query requires a positive radius");
  std::size_t count = 0;
  if (nodes_.empty() || limit == 0) return 0;
  const double r2 = radius * radius;
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (box_distance_sq(node.box, center) > r2) continue;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        if (squared_distance(points_[order_[i]], center) <= r2 && ++count >= limit) return count;
      }
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  return count;
}

std::vector<std::size_t> SpatialIndex::knn_query(const Vec3& center, std::size_t k) const {
  if (k == 0) throw ParameterError("knn query requires k >= 1");
  using Entry = std::pair<double, std::uint32_t>;
  std::priority_queue<Entry> heap;  // worst candidate on top
  if (!nodes_.empty()) {
    std::vector<std::pair<double, std::int32_t>> stack{{box_distance_sq(nodes_[0].box, center), 0}};
    while (!stack.empty()) {
      const auto [bd, id] = stack.back();
      stack.pop_back();
      if (heap.size() == k && bd > heap.top().first) continue;
      const Node& node = nodes_[id];
      if (node.left < 0) {
        for (std::uint32_t i = node.begin; i < node.end; ++i) {
          const std::uint32_t idx = order_[i];
          const Entry e{squared_distance(points_[idx], center), idx};
          if (heap.size() < k) {
            heap.push(e);
          } else if (e < heap.top()) {
            heap.pop();
            heap.push(e);
          }
        }
      } else {
        const double dl = box_distance_sq(nodes_[node.left].box, center);
        const double dr = box_distance_sq(nodes_[node.right].box, center);
        // Push the farther child first so the nearer one is expanded next.
        if (dl <= dr) {
          stack.emplace_back(dr, node.right);
          stack.emplace_back(dl, node.left);
        } else {
          stack.emplace_back(dl, node.left);
          stack.emplace_back(dr, node.right);
        }
      }
    }
  }
  std::vector<std::size_t> out(heap.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = heap.top().second;
    heap.pop();
  }
  return out;
}

double median_nearest_neighbor_distance(const SpatialIndex& index) {
  const std::size_t n = index.size();
  if (n < 2) throw PreconditionError("nearest-neighbour spacing needs at least two points");
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto nn = index.knn_query(index.point(i), 2);
    d[i] = std::sqrt(squared_distance(index.point(i), index.point(nn[0] == i ? nn[1] : nn[0])));
  }
  auto mid = d.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(d.begin(), mid, d.end());
  return *mid;
}

}  // namespace depthforge
