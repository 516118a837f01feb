#pragma once

#include "specwalk/kdtree.hpp"
#include "specwalk/point_cloud.hpp"

#include <cstddef>
#include <vector>

namespace specwalk {

// Translate to the centroid and scale so the farthest point has norm 1.
PointCloud normalize_unit_ball(const PointCloud& cloud);

struct GraphEdge {
  std::size_t neighbor;
  double length;
};

// Symmetrized kNN graph: (i, j) is an edge iff j is among the k nearest
// neighbors of i or i is among the k nearest neighbors of j.
class NeighborGraph {
 public:
  NeighborGraph(std::size_t k, std::vector<std::vector<GraphEdge>> adjacency);

  std::size_t size() const { return adjacency_.size(); }
  std::size_t k() const { return k_; }
  // Neighbors of node i, ascending by index.
  const std::vector<GraphEdge>& neighbors(std::size_t i) const { return adjacency_[i]; }
  std::size_t degree(std::size_t i) const { return adjacency_[i].size(); }
  bool has_edge(std::size_t i, std::size_t j) const;
  std::size_t edge_count() const;
  std::size_t component_count() const;

 private:
  std::size_t k_;
  std::vector<std::vector<GraphEdge>> adjacency_;
};

NeighborGraph knn_graph(const PointCloud& cloud, std::size_t k);

enum class ChamferMode { kOneDirectional, kSymmetric };

// Mean over adv of the squared distance to the nearest ref point. kSymmetric
// averages both directions.
double chamfer_distance(const PointCloud& adv, const PointCloud& ref,
                        ChamferMode mode = ChamferMode::kOneDirectional);
// max over adv of the distance to the nearest ref point.
double hausdorff_distance(const PointCloud& adv, const PointCloud& ref);
// Population variance of the adv->ref nearest-neighbor distances.
double variance_distance(const PointCloud& adv, const PointCloud& ref);
// Frobenius norm of the index-wise displacement.
double l2_norm_distance(const PointCloud& adv, const PointCloud& src);
double max_pointwise_deviation(const PointCloud& can, const PointCloud& src);
double combined_distance(const PointCloud& can, const PointCloud& src, double gamma1, double gamma2,
                         ChamferMode mode = ChamferMode::kOneDirectional);

struct DistanceBreakdown {
  double chamfer = 0.0;
  double hausdorff = 0.0;
  double variance = 0.0;

  double combined(double gamma1, double gamma2) const {
    return chamfer + gamma1 * hausdorff + gamma2 * variance;
  }
};

// A reference cloud with a prebuilt spatial index, for repeated set-distance
// queries against the same cloud (the attack source, oracle prototypes).
class ReferenceCloud {
 public:
  explicit ReferenceCloud(PointCloud cloud);

  const PointCloud& cloud() const { return cloud_; }
  const KdTree& index() const { return tree_; }

  // Distance from each adv point to its nearest reference point.
  std::vector<double> nearest_distances(const PointCloud& adv) const;
  double chamfer_from(const PointCloud& adv) const;
  DistanceBreakdown breakdown(const PointCloud& adv, ChamferMode mode = ChamferMode::kOneDirectional) const;

 private:
  PointCloud cloud_;
  KdTree tree_;
};

}  // namespace specwalk
