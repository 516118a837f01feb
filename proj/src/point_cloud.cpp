#include "specwalk/point_cloud.hpp"

#include "specwalk/errors.hpp"

#include <utility>

namespace specwalk {

PointCloud::PointCloud(Points points) : points_(std::move(points)) {
  if (points_.rows() == 0) throw InvalidArgument("point cloud must contain at least one point");
  if (!points_.allFinite()) throw InvalidArgument("point cloud contains non-finite coordinates");
}

PointCloud PointCloud::from_flat(const FlatVector& flat) {
  if (flat.size() == 0 || flat.size() % 3 != 0)
    throw InvalidArgument("flat coordinate vector length must be a positive multiple of 3");
  Points pts(flat.size() / 3, 3);
  Eigen::Map<FlatVector>(pts.data(), pts.size()) = flat;
  return PointCloud(std::move(pts));
}

PointCloud PointCloud::offset(const FlatVector& delta) const {
  if (delta.size() != points_.size()) throw InvalidArgument("offset length does not match cloud");
  Points pts = points_;
  Eigen::Map<FlatVector>(pts.data(), pts.size()) += delta;
  return PointCloud(std::move(pts));
}

PointCloud interpolate(const PointCloud& a, const PointCloud& b, double weight) {
  if (a.size() != b.size()) throw InvalidArgument("interpolate: point counts differ");
  return PointCloud(Points(weight * a.points() + (1.0 - weight) * b.points()));
}

}  // namespace specwalk
