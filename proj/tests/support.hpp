#pragma once

#include "specwalk/point_cloud.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace testing_support {

using specwalk::PointCloud;
using specwalk::Points;

inline const nlohmann::json& expected() {
  static const nlohmann::json data = [] {
    std::ifstream in(std::string(SPECWALK_TEST_DATA) + "/expected.json");
    return nlohmann::json::parse(in);
  }();
  return data;
}

inline PointCloud cloud_from_json(const nlohmann::json& rows) {
  Points p(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int c = 0; c < 3; ++c) p(static_cast<Eigen::Index>(i), c) = rows[i][c].get<double>();
  return PointCloud(p);
}

inline PointCloud make_cloud(std::initializer_list<std::array<double, 3>> rows) {
  Points p(static_cast<Eigen::Index>(rows.size()), 3);
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    p.row(i++) << r[0], r[1], r[2];
  }
  return PointCloud(p);
}

inline PointCloud random_cloud(std::size_t n, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  Points p(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    for (int c = 0; c < 3; ++c) p(i, c) = g(rng);
  return PointCloud(p);
}

// Uniform samples on the unit sphere.
inline PointCloud sphere_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Points p(static_cast<Eigen::Index>(n), 3);
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Vector3d v(g(rng), g(rng), g(rng));
    p.row(i) = v.normalized().transpose();
  }
  return PointCloud(p);
}

// O(n^2) nearest neighbor: (index, squared distance), ties to the lower index.
inline std::pair<std::size_t, double> brute_nearest(const Points& ref, const Eigen::Vector3d& q) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < ref.rows(); ++j) {
    const double d = (ref.row(j).transpose() - q).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::size_t>(j);
    }
  }
  return {best, best_d};
}

inline std::vector<std::pair<std::size_t, double>> brute_knn(const Points& ref, const Eigen::Vector3d& q,
                                                              std::size_t k, std::size_t exclude) {
  std::vector<std::pair<std::size_t, double>> all;
  for (Eigen::Index j = 0; j < ref.rows(); ++j) {
    if (static_cast<std::size_t>(j) == exclude) continue;
    all.emplace_back(static_cast<std::size_t>(j), (ref.row(j).transpose() - q).squaredNorm());
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second < b.second : a.first < b.first;
  });
  all.resize(std::min(k, all.size()));
  return all;
}

// Cyclic Jacobi eigenvalues of a symmetric matrix, ascending.
inline Eigen::VectorXd jacobi_eigenvalues(Eigen::MatrixXd a, int sweeps = 100) {
  const auto n = a.rows();
  for (int s = 0; s < sweeps; ++s) {
    double off = 0.0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-26) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - sn * akq;
          a(k, q) = sn * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - sn * aqk;
          a(q, k) = sn * apk + c * aqk;
        }
      }
    }
  }
  Eigen::VectorXd d = a.diagonal();
  std::sort(d.data(), d.data() + d.size());
  return d;
}

}  // namespace testing_support
