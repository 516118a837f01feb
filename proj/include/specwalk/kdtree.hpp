#pragma once

#include "specwalk/point_cloud.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

namespace specwalk {

// Exact k-nearest-neighbor index over a fixed set of 3D points.
//
// Results are ordered by (squared distance, original index), so equidistant
// points always resolve to the lower index. The tree owns a reordered copy of
// the coordinates and is immutable after construction; concurrent queries are
// safe.
class KdTree {
 public:
  struct Neighbor {
    std::size_t index;
    double sq_dist;
  };

  static constexpr std::size_t kNoExclusion = std::numeric_limits<std::size_t>::max();

  explicit KdTree(const Points& points, std::size_t leaf_size = 8);

  std::size_t size() const { return coords_.size(); }

  // Nearest point to q. Requires a nonempty tree.
  Neighbor nearest(const Vec3& q) const;

  // k nearest points to q, sorted ascending; `exclude` is skipped (self queries).
  std::vector<Neighbor> knn(const Vec3& q, std::size_t k, std::size_t exclude = kNoExclusion) const;

 private:
  struct Node {
    std::uint32_t begin;
    std::uint32_t end;
    std::int32_t left;
    std::int32_t right;
    int dim;
    double split;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  void search_nearest(std::int32_t node, const std::array<double, 3>& q, Neighbor& best) const;
  void search_knn(std::int32_t node, const std::array<double, 3>& q, std::size_t k,
                  std::size_t exclude, std::vector<Neighbor>& heap) const;

  std::vector<std::array<double, 3>> coords_;
  std::vector<std::size_t> original_index_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

}  // namespace specwalk
