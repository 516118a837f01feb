#include "specwalk/defense.hpp"

#include "specwalk/errors.hpp"
#include "specwalk/hash.hpp"
#include "specwalk/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace specwalk {
namespace {

PointCloud keep_rows(const PointCloud& cloud, const std::vector<bool>& keep) {
  const auto survivors = static_cast<Eigen::Index>(std::count(keep.begin(), keep.end(), true));
  if (survivors == 0) throw DefenseAnnihilated("defense removed every point of the input");
  Points out(survivors, 3);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) out.row(r++) = cloud.points().row(static_cast<Eigen::Index>(i));
  }
  return PointCloud(std::move(out));
}

}  // namespace

void DefenseConfig::validate() const {
  if (kind == DefenseKind::kSor) {
    if (sor_k < 1) throw InvalidArgument("SOR requires k >= 1");
    if (!(sor_alpha >= 0.0)) throw InvalidArgument("SOR alpha must be nonnegative");
  } else if (!(srs_drop_ratio > 0.0 && srs_drop_ratio < 1.0)) {
    throw InvalidArgument("SRS drop ratio must lie in (0, 1)");
  }
}

PointCloud sor_filter(const PointCloud& cloud, std::size_t k, double alpha) {
  const auto n = cloud.size();
  if (k < 1 || k >= n) throw InvalidArgument("sor_filter: k must satisfy 1 <= k < n");
  const KdTree tree(cloud.points());
  std::vector<double> mean_dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (const auto& nb : tree.knn(cloud.point(i), k, i)) sum += std::sqrt(nb.sq_dist);
    mean_dist[i] = sum / static_cast<double>(k);
  }
  const double mean = std::accumulate(mean_dist.begin(), mean_dist.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (const double d : mean_dist) ss += (d - mean) * (d - mean);
  const double stddev = std::sqrt(ss / static_cast<double>(n - 1));
  // Relative slack so rounding noise among equal distances does not count as spread.
  const double threshold = (mean + alpha * stddev) * (1.0 + 1e-9);

  std::vector<bool> keep(n);
  for (std::size_t i = 0; i < n; ++i) keep[i] = !(mean_dist[i] > threshold);
  return keep_rows(cloud, keep);
}

PointCloud srs_filter(const PointCloud& cloud, double drop_ratio, std::uint64_t seed) {
  if (!(drop_ratio > 0.0 && drop_ratio < 1.0)) throw InvalidArgument("srs_filter: drop ratio must lie in (0, 1)");
  const auto n = cloud.size();
  // The epsilon absorbs representation error such as 0.3 * 10 = 2.9999999999999996.
  const auto drop = static_cast<std::size_t>(std::floor(drop_ratio * static_cast<double>(n) + 1e-9));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> keep(n, true);
  for (std::size_t i = 0; i < drop; ++i) keep[order[i]] = false;
  return keep_rows(cloud, keep);
}

std::uint64_t cloud_seed(const PointCloud& cloud, std::uint64_t run_seed) {
  Fnv1a h;
  h.update(cloud.points().data(), sizeof(double) * static_cast<std::size_t>(cloud.points().size()));
  h.update(&run_seed, sizeof(run_seed));
  return h.digest();
}

DefendedOracle::DefendedOracle(std::shared_ptr<HardLabelOracle> inner, DefenseConfig config)
    : inner_(std::move(inner)), config_(config) {
  if (!inner_) throw InvalidArgument("DefendedOracle: null inner oracle");
  config_.validate();
}

PointCloud DefendedOracle::purify(const PointCloud& cloud) const {
  if (config_.kind == DefenseKind::kSor) return sor_filter(cloud, config_.sor_k, config_.sor_alpha);
  return srs_filter(cloud, config_.srs_drop_ratio, cloud_seed(cloud, config_.seed));
}

Label DefendedOracle::do_classify(const PointCloud& cloud) { return inner_->classify(purify(cloud)); }

std::shared_ptr<HardLabelOracle> defended_oracle(std::shared_ptr<HardLabelOracle> inner, DefenseConfig config) {
  return std::make_shared<DefendedOracle>(std::move(inner), config);
}

}  // namespace specwalk
