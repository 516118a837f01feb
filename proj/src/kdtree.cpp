#include "specwalk/kdtree.hpp"

#include "specwalk/errors.hpp"

#include <algorithm>
#include <numeric>

namespace specwalk {
namespace {

bool closer(const KdTree::Neighbor& a, const KdTree::Neighbor& b) {
  return a.sq_dist < b.sq_dist || (a.sq_dist == b.sq_dist && a.index < b.index);
}

double sq_distance(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

KdTree::KdTree(const Points& points, std::size_t leaf_size) : leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (n == 0) throw InvalidArgument("KdTree requires at least one point");
  coords_.resize(n);
  original_index_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    coords_[i] = {points(r, 0), points(r, 1), points(r, 2)};
  }
  std::iota(original_index_.begin(), original_index_.end(), std::size_t{0});
  nodes_.reserve(2 * n / leaf_size_ + 1);
  build(0, static_cast<std::uint32_t>(n));
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end) {
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({begin, end, -1, -1, 0, 0.0});
  if (end - begin <= leaf_size_) return id;

  std::array<double, 3> lo{coords_[begin]};
  std::array<double, 3> hi{coords_[begin]};
  for (auto i = begin; i < end; ++i) {
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::min(lo[d], coords_[i][d]);
      hi[d] = std::max(hi[d], coords_[i][d]);
    }
  }
  int dim = 0;
  for (int d = 1; d < 3; ++d) {
    if (hi[d] - lo[d] > hi[dim] - lo[dim]) dim = d;
  }
  if (hi[dim] == lo[dim]) return id;  // all coincident: keep as leaf

  const auto mid = begin + (end - begin) / 2;
  std::vector<std::uint32_t> order(end - begin);
  std::iota(order.begin(), order.end(), begin);
  std::nth_element(order.begin(), order.begin() + (mid - begin), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return coords_[a][dim] < coords_[b][dim]; });
  std::vector<std::array<double, 3>> c(order.size());
  std::vector<std::size_t> o(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    c[i] = coords_[order[i]];
    o[i] = original_index_[order[i]];
  }
  std::copy(c.begin(), c.end(), coords_.begin() + begin);
  std::copy(o.begin(), o.end(), original_index_.begin() + begin);

  nodes_[id].dim = dim;
  nodes_[id].split = coords_[mid][dim];
  const auto left = build(begin, mid);
  const auto right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

KdTree::Neighbor KdTree::nearest(const Vec3& q) const {
  Neighbor best{kNoExclusion, std::numeric_limits<double>::infinity()};
  search_nearest(0, {q.x(), q.y(), q.z()}, best);
  return best;
}

void KdTree::search_nearest(std::int32_t node_id, const std::array<double, 3>& q, Neighbor& best) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (auto i = node.begin; i < node.end; ++i) {
      const Neighbor cand{original_index_[i], sq_distance(coords_[i], q)};
      if (closer(cand, best)) best = cand;
    }
    return;
  }
  const double diff = q[node.dim] - node.split;
  const auto near = diff < 0.0 ? node.left : node.right;
  const auto far = diff < 0.0 ? node.right : node.left;
  search_nearest(near, q, best);
  // <= keeps equidistant points on the far side reachable for index tie-breaks.
  if (diff * diff <= best.sq_dist) search_nearest(far, q, best);
}

std::vector<KdTree::Neighbor> KdTree::knn(const Vec3& q, std::size_t k, std::size_t exclude) const {
  std::vector<Neighbor> heap;
  if (k == 0) return heap;
  heap.reserve(k + 1);
  search_knn(0, {q.x(), q.y(), q.z()}, k, exclude, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

void KdTree::search_knn(std::int32_t node_id, const std::array<double, 3>& q, std::size_t k,
                        std::size_t exclude, std::vector<Neighbor>& heap) const {
  const Node& node = nodes_[node_id];
  if (node.left < 0) {
    for (auto i = node.begin; i < node.end; ++i) {
      if (original_index_[i] == exclude) continue;
      const Neighbor cand{original_index_[i], sq_distance(coords_[i], q)};
      if (heap.size() < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), closer);
      } else if (closer(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), closer);
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), closer);
      }
    }
    return;
  }
  const double diff = q[node.dim] - node.split;
  const auto near = diff < 0.0 ? node.left : node.right;
  const auto far = diff < 0.0 ? node.right : node.left;
  search_knn(near, q, k, exclude, heap);
  if (heap.size() < k || diff * diff <= heap.front().sq_dist) search_knn(far, q, k, exclude, heap);
}

}  // namespace specwalk
