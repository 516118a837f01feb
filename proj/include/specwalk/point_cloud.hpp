#pragma once

#include <Eigen/Core>

#include <cstddef>

namespace specwalk {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using Vec3 = Eigen::Vector3d;
using FlatVector = Eigen::VectorXd;

// Ordered, nonempty list of finite 3D points. Index i of a cloud derived from
// another (perturbation, interpolation) corresponds to index i of its origin.
class PointCloud {
 public:
  PointCloud() = default;
  explicit PointCloud(Points points);

  static PointCloud from_flat(const FlatVector& flat);

  std::size_t size() const { return static_cast<std::size_t>(points_.rows()); }
  const Points& points() const { return points_; }
  Vec3 point(std::size_t i) const { return points_.row(static_cast<Eigen::Index>(i)).transpose(); }

  // Coordinates flattened as x0 y0 z0 x1 y1 z1 ...
  Eigen::Map<const FlatVector> flat() const {
    return {points_.data(), points_.size()};
  }

  // this + offset, with offset laid out as flat().
  PointCloud offset(const FlatVector& delta) const;

  bool operator==(const PointCloud& other) const { return points_ == other.points_; }

 private:
  Points points_;
};

// weight * a + (1 - weight) * b, index-wise.
PointCloud interpolate(const PointCloud& a, const PointCloud& b, double weight);

}  // namespace specwalk
