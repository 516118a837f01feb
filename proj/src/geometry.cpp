#include "specwalk/geometry.hpp"

#include "specwalk/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace specwalk {

PointCloud normalize_unit_ball(const PointCloud& cloud) {
  if (cloud.size() < 2) throw InvalidArgument("normalize_unit_ball: need at least 2 points");
  const Eigen::RowVector3d centroid = cloud.points().colwise().mean();
  Points centered = cloud.points().rowwise() - centroid;
  const double radius = centered.rowwise().norm().maxCoeff();
  if (!(radius > 0.0)) throw DataError("normalize_unit_ball: zero-radius cloud (all points coincide)");
  centered /= radius;
  return PointCloud(std::move(centered));
}

NeighborGraph::NeighborGraph(std::size_t k, std::vector<std::vector<GraphEdge>> adjacency)
    : k_(k), adjacency_(std::move(adjacency)) {
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    auto& row = adjacency_[i];
    std::sort(row.begin(), row.end(), [](const GraphEdge& a, const GraphEdge& b) { return a.neighbor < b.neighbor; });
    for (const auto& e : row) {
      if (e.neighbor == i) throw InvalidArgument("NeighborGraph: self-loop at node " + std::to_string(i));
      if (e.neighbor >= adjacency_.size()) throw InvalidArgument("NeighborGraph: edge endpoint out of range");
    }
  }
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    for (const auto& e : adjacency_[i]) {
      if (!has_edge(e.neighbor, i)) throw InvalidArgument("NeighborGraph: adjacency is not symmetric");
    }
  }
}

bool NeighborGraph::has_edge(std::size_t i, std::size_t j) const {
  const auto& row = adjacency_.at(i);
  const auto it = std::lower_bound(row.begin(), row.end(), j,
                                   [](const GraphEdge& e, std::size_t v) { return e.neighbor < v; });
  return it != row.end() && it->neighbor == j;
}

std::size_t NeighborGraph::edge_count() const {
  std::size_t twice = 0;
  for (const auto& row : adjacency_) twice += row.size();
  return twice / 2;
}

std::size_t NeighborGraph::component_count() const {
  std::vector<int> seen(size(), 0);
  std::vector<std::size_t> stack;
  std::size_t components = 0;
  for (std::size_t s = 0; s < size(); ++s) {
    if (seen[s]) continue;
    ++components;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (const auto& e : adjacency_[v]) {
        if (!seen[e.neighbor]) {
          seen[e.neighbor] = 1;
          stack.push_back(e.neighbor);
        }
      }
    }
  }
  return components;
}

NeighborGraph knn_graph(const PointCloud& cloud, std::size_t k) {
  const auto n = cloud.size();
  if (n < 2) throw InvalidArgument("knn_graph: need at least 2 points");
  if (k < 1 || k >= n) throw InvalidArgument("knn_graph: k must satisfy 1 <= k < n");

  const KdTree tree(cloud.points());
  std::vector<std::vector<GraphEdge>> adjacency(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& nb : tree.knn(cloud.point(i), k, i)) {
      adjacency[i].push_back({nb.index, std::sqrt(nb.sq_dist)});
    }
  }
  // Symmetrize: add the reverse of every directed edge that is missing.
  std::vector<std::vector<GraphEdge>> reverse(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (const auto& e : adjacency[i]) reverse[e.neighbor].push_back({i, e.length});
  }
  for (std::size_t j = 0; j < n; ++j) {
    auto& row = adjacency[j];
    for (const auto& e : reverse[j]) {
      const bool present = std::any_of(row.begin(), row.end(), [&](const GraphEdge& x) { return x.neighbor == e.neighbor; });
      if (!present) row.push_back(e);
    }
  }
  return NeighborGraph(k, std::move(adjacency));
}

ReferenceCloud::ReferenceCloud(PointCloud cloud) : cloud_(std::move(cloud)), tree_(cloud_.points()) {}

std::vector<double> ReferenceCloud::nearest_distances(const PointCloud& adv) const {
  std::vector<double> d(adv.size());
  for (std::size_t i = 0; i < adv.size(); ++i) d[i] = std::sqrt(tree_.nearest(adv.point(i)).sq_dist);
  return d;
}

double ReferenceCloud::chamfer_from(const PointCloud& adv) const {
  double sum = 0.0;
  for (std::size_t i = 0; i < adv.size(); ++i) sum += tree_.nearest(adv.point(i)).sq_dist;
  return sum / static_cast<double>(adv.size());
}

DistanceBreakdown ReferenceCloud::breakdown(const PointCloud& adv, ChamferMode mode) const {
  const auto d = nearest_distances(adv);
  const auto m = static_cast<double>(d.size());
  DistanceBreakdown out;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const double x : d) {
    sum += x;
    sum_sq += x * x;
    out.hausdorff = std::max(out.hausdorff, x);
  }
  out.chamfer = sum_sq / m;
  const double mean = sum / m;
  double var = 0.0;
  for (const double x : d) var += (x - mean) * (x - mean);
  out.variance = var / m;
  if (mode == ChamferMode::kSymmetric) {
    out.chamfer = 0.5 * (out.chamfer + ReferenceCloud(adv).chamfer_from(cloud_));
  }
  return out;
}

double chamfer_distance(const PointCloud& adv, const PointCloud& ref, ChamferMode mode) {
  const double forward = ReferenceCloud(ref).chamfer_from(adv);
  if (mode == ChamferMode::kOneDirectional) return forward;
  return 0.5 * (forward + ReferenceCloud(adv).chamfer_from(ref));
}

double hausdorff_distance(const PointCloud& adv, const PointCloud& ref) {
  return ReferenceCloud(ref).breakdown(adv).hausdorff;
}

double variance_distance(const PointCloud& adv, const PointCloud& ref) {
  return ReferenceCloud(ref).breakdown(adv).variance;
}

double l2_norm_distance(const PointCloud& adv, const PointCloud& src) {
  if (adv.size() != src.size()) throw InvalidArgument("l2_norm_distance: point counts differ");
  return (adv.points() - src.points()).norm();
}

double max_pointwise_deviation(const PointCloud& can, const PointCloud& src) {
  if (can.size() != src.size()) throw InvalidArgument("max_pointwise_deviation: point counts differ");
  return (can.points() - src.points()).rowwise().norm().maxCoeff();
}

double combined_distance(const PointCloud& can, const PointCloud& src, double gamma1, double gamma2,
                         ChamferMode mode) {
  return ReferenceCloud(src).breakdown(can, mode).combined(gamma1, gamma2);
}

}  // namespace specwalk
