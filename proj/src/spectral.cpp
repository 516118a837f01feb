#include "specwalk/spectral.hpp"

#include "specwalk/errors.hpp"
#include "specwalk/hash.hpp"
#include "specwalk/log.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

namespace specwalk {
namespace {

constexpr double kSignThreshold = 1e-12;
constexpr double kSymmetryTol = 1e-9;

void normalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > kSignThreshold) {
      if (v[i] < 0.0) v = -v;
      return;
    }
  }
}

bool lexicographically_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

}  // namespace

Eigen::MatrixXd build_laplacian(const NeighborGraph& graph, LaplacianWeighting weighting) {
  const auto n = static_cast<Eigen::Index>(graph.size());
  double scale = 1.0;
  if (weighting == LaplacianWeighting::kGaussian) {
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < graph.size(); ++i) {
      for (const auto& e : graph.neighbors(i)) {
        sum += e.length;
        ++count;
      }
    }
    scale = count > 0 ? sum / static_cast<double>(count) : 1.0;
    if (!(scale > 0.0)) scale = 1.0;
  }

  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (const auto& e : graph.neighbors(i)) {
      const double w = weighting == LaplacianWeighting::kGaussian
                           ? std::exp(-(e.length * e.length) / (scale * scale))
                           : 1.0;
      lap(r, static_cast<Eigen::Index>(e.neighbor)) = -w;
      lap(r, r) += w;
    }
  }
  return lap;
}

SpectralBasis::SpectralBasis(Eigen::VectorXd eigenvalues, Eigen::MatrixXd eigenvectors)
    : eigenvalues_(std::move(eigenvalues)), eigenvectors_(std::move(eigenvectors)) {
  if (eigenvectors_.rows() != eigenvectors_.cols() || eigenvectors_.cols() != eigenvalues_.size())
    throw InvalidArgument("SpectralBasis: eigenvector matrix must be n x n with n eigenvalues");
  Fnv1a h;
  h.update(eigenvalues_.data(), sizeof(double) * static_cast<std::size_t>(eigenvalues_.size()));
  h.update(eigenvectors_.data(), sizeof(double) * static_cast<std::size_t>(eigenvectors_.size()));
  id_ = h.digest();
}

std::size_t SpectralBasis::near_zero_count(double tol) const {
  return static_cast<std::size_t>((eigenvalues_.array().abs() < tol).count());
}

SpectralBasis eigendecompose(const Eigen::MatrixXd& laplacian) {
  const auto n = laplacian.rows();
  if (n == 0 || laplacian.cols() != n) throw InvalidArgument("eigendecompose: matrix must be square and nonempty");
  const double asym = (laplacian - laplacian.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymmetryTol)
    throw InvalidArgument("eigendecompose: matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("eigendecompose: tridiagonal QL did not converge for n=" + std::to_string(n) +
                         " (limit " + std::to_string(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>::m_maxIterations) +
                         " sweeps per eigenvalue)");
  }

  Eigen::VectorXd values = solver.eigenvalues();
  Eigen::MatrixXd vectors = solver.eigenvectors();
  for (Eigen::Index c = 0; c < n; ++c) normalize_sign(vectors.col(c));

  // Eigen returns ascending eigenvalues; reorder runs of numerically equal
  // eigenvalues by their sign-normalized eigenvectors.
  const double tie_tol = 1e-10 * std::max(1.0, values.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::size_t run_begin = 0;
  for (std::size_t i = 1; i <= order.size(); ++i) {
    const bool run_ends = i == order.size() ||
                          values[static_cast<Eigen::Index>(i)] - values[static_cast<Eigen::Index>(i - 1)] > tie_tol;
    if (!run_ends) continue;
    if (i - run_begin > 1) {
      std::sort(order.begin() + static_cast<std::ptrdiff_t>(run_begin), order.begin() + static_cast<std::ptrdiff_t>(i),
                [&](Eigen::Index a, Eigen::Index b) {
                  return lexicographically_less(vectors.col(a), vectors.col(b));
                });
    }
    run_begin = i;
  }

  Eigen::VectorXd sorted_values(n);
  Eigen::MatrixXd sorted_vectors(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    sorted_values[c] = values[order[static_cast<std::size_t>(c)]];
    sorted_vectors.col(c) = vectors.col(order[static_cast<std::size_t>(c)]);
  }
  return SpectralBasis(std::move(sorted_values), std::move(sorted_vectors));
}

SpectralBasis cloud_basis(const PointCloud& cloud, std::size_t k, LaplacianWeighting weighting) {
  const auto graph = knn_graph(cloud, k);
  const auto components = graph.component_count();
  if (components > 1) {
    warn("kNN graph (k=" + std::to_string(k) + ") has " + std::to_string(components) +
         " connected components; spectrum has multiple zero frequencies");
  }
  return eigendecompose(build_laplacian(graph, weighting));
}

Spectrum gft(const PointCloud& cloud, const SpectralBasis& basis) {
  if (cloud.size() != basis.size()) throw InvalidArgument("gft: cloud size does not match basis");
  return Spectrum{basis.eigenvectors().transpose() * cloud.points(), basis.id()};
}

PointCloud igft(const Spectrum& spectrum, const SpectralBasis& basis) {
  if (spectrum.size() != basis.size()) throw InvalidArgument("igft: spectrum size does not match basis");
  return PointCloud(Points(basis.eigenvectors() * spectrum.coeffs));
}

std::pair<Spectrum, Spectrum> split_bands(const Spectrum& spectrum, std::size_t cutoff) {
  const auto n = spectrum.size();
  if (cutoff == 0 || cutoff >= n)
    throw InvalidArgument("split_bands: cutoff " + std::to_string(cutoff) + " outside (0, " + std::to_string(n) + ")");
  const auto c = static_cast<Eigen::Index>(cutoff);
  const auto rest = static_cast<Eigen::Index>(n - cutoff);
  return {Spectrum{spectrum.coeffs.topRows(c), spectrum.basis_id},
          Spectrum{spectrum.coeffs.bottomRows(rest), spectrum.basis_id}};
}

Spectrum concat_bands(const Spectrum& low, const Spectrum& high) {
  SpectrumCoeffs all(low.coeffs.rows() + high.coeffs.rows(), 3);
  all << low.coeffs, high.coeffs;
  return Spectrum{std::move(all), low.basis_id};
}

double band_energy_fraction(const Spectrum& spectrum, std::size_t cutoff) {
  const auto [low, high] = split_bands(spectrum, cutoff);
  const double total = low.energy() + high.energy();
  if (!(total > 0.0)) throw InvalidArgument("band_energy_fraction: spectrum has zero energy");
  return low.energy() / total;
}

}  // namespace specwalk
