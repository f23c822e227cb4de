#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace hgs {

/// Static 3-d tree for k-nearest-neighbour queries over a fixed point set.
class KdTree {
 public:
  using Point = std::array<double, 3>;

  explicit KdTree(std::span<const Point> points);

  struct Neighbor {
    double dist2;
    std::uint32_t index;
    auto operator<=>(const Neighbor&) const = default;
  };

  /// The k nearest points to `query`, closest first. Ties on distance resolve
  /// to the lower index. `skip` excludes one index (typically the query point).
  std::vector<Neighbor> knn(const Point& query, std::size_t k,
                            std::int64_t skip = -1) const;

 private:
  struct Node {
    // Leaf when axis < 0: points [begin, end) of order_.
    std::int32_t axis = -1;
    double split = 0.0;
    std::uint32_t begin = 0, end = 0;
    std::int32_t left = -1, right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search(std::int32_t node, const Point& q, std::size_t k, std::int64_t skip,
              std::vector<Neighbor>& heap) const;

  std::vector<Point> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace hgs
