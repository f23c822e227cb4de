#include "hgs/kdtree.hpp"

#include <algorithm>
#include <numeric>

namespace hgs {
namespace {
constexpr std::uint32_t kLeafSize = 12;
}

KdTree::KdTree(std::span<const Point> points) : points_(points.begin(), points.end()) {
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  nodes_.reserve(2 * points_.size() / kLeafSize + 1);
  if (!points_.empty()) build(0, static_cast<std::uint32_t>(points_.size()));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({});
  nodes_[id].begin = begin;
  nodes_[id].end = end;
  if (end - begin <= kLeafSize) return id;

  Point lo = points_[order_[begin]], hi = lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], points_[order_[i]][a]);
      hi[a] = std::max(hi[a], points_[order_[i]][a]);
    }
  }
  int axis = 0;
  for (int a = 1; a < 3; ++a) {
    if (hi[a] - lo[a] > hi[axis] - lo[axis]) axis = a;
  }
  if (hi[axis] == lo[axis]) return id;  // all coincident

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return points_[a][axis] < points_[b][axis];
                   });
  const double split = points_[order_[mid]][axis];
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].axis = axis;
  nodes_[id].split = split;
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

std::vector<KdTree::Neighbor> KdTree::knn(const Point& query, std::size_t k,
                                          std::int64_t skip) const {
  std::vector<Neighbor> heap;
  if (k == 0 || nodes_.empty()) return heap;
  heap.reserve(k + 1);
  search(0, query, k, skip, heap);
  std::sort_heap(heap.begin(), heap.end());
  return heap;
}

void KdTree::search(std::int32_t id, const Point& q, std::size_t k, std::int64_t skip,
                    std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[id];
  if (node.axis < 0) {
    for (std::uint32_t i = node.begin; i < node.end; ++i) {
      const std::uint32_t idx = order_[i];
      if (static_cast<std::int64_t>(idx) == skip) continue;
      const Point& p = points_[idx];
      const double dx = p[0] - q[0], dy = p[1] - q[1], dz = p[2] - q[2];
      const Neighbor cand{dx * dx + dy * dy + dz * dz, idx};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  const double diff = q[node.axis] - node.split;
  const std::int32_t near = diff < 0 ? node.left : node.right;
  const std::int32_t far = diff < 0 ? node.right : node.left;
  search(near, q, k, skip, heap);
  if (heap.size() < k || diff * diff <= heap.front().dist2) search(far, q, k, skip, heap);
}

}  // namespace hgs
