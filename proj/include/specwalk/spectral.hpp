#pragma once

#include "specwalk/geometry.hpp"
#include "specwalk/point_cloud.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <utility>

namespace specwalk {

enum class LaplacianWeighting {
  kUnweighted,  // A_ij = 1 on every edge
  kGaussian,    // A_ij = exp(-d_ij^2 / s^2), s = mean edge length
};

// Combinatorial Laplacian L = D - A of the graph.
Eigen::MatrixXd build_laplacian(const NeighborGraph& graph,
                                LaplacianWeighting weighting = LaplacianWeighting::kUnweighted);

// Orthonormal eigenbasis of a graph Laplacian, ascending by eigenvalue
// (graph frequency). Column i of eigenvectors() pairs with eigenvalues()[i].
// Each column is sign-normalized so its first entry with magnitude > 1e-12 is
// positive; columns of numerically equal eigenvalues are ordered
// lexicographically, so identical input always yields an identical basis.
class SpectralBasis {
 public:
  SpectralBasis(Eigen::VectorXd eigenvalues, Eigen::MatrixXd eigenvectors);

  std::size_t size() const { return static_cast<std::size_t>(eigenvalues_.size()); }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& eigenvectors() const { return eigenvectors_; }
  // Content hash of the basis; equal bases have equal ids.
  std::uint64_t id() const { return id_; }
  std::size_t near_zero_count(double tol = 1e-8) const;

 private:
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  std::uint64_t id_;
};

// Full dense symmetric eigendecomposition. Throws InvalidArgument when the
// input is not symmetric to 1e-9, NumericalError when the solver fails.
SpectralBasis eigendecompose(const Eigen::MatrixXd& laplacian);

// kNN graph -> Laplacian -> eigenbasis. Warns when the graph is disconnected.
SpectralBasis cloud_basis(const PointCloud& cloud, std::size_t k,
                          LaplacianWeighting weighting = LaplacianWeighting::kUnweighted);

using SpectrumCoeffs = Eigen::Matrix<double, Eigen::Dynamic, 3>;

// GFT coefficients, one column per coordinate channel, rows in ascending
// frequency order.
struct Spectrum {
  SpectrumCoeffs coeffs;
  std::uint64_t basis_id = 0;

  std::size_t size() const { return static_cast<std::size_t>(coeffs.rows()); }
  double energy() const { return coeffs.squaredNorm(); }
};

Spectrum gft(const PointCloud& cloud, const SpectralBasis& basis);
PointCloud igft(const Spectrum& spectrum, const SpectralBasis& basis);

// Rows [0, cutoff) and [cutoff, n).
std::pair<Spectrum, Spectrum> split_bands(const Spectrum& spectrum, std::size_t cutoff);
Spectrum concat_bands(const Spectrum& low, const Spectrum& high);
// Low-band share of the total energy.
double band_energy_fraction(const Spectrum& spectrum, std::size_t cutoff);

}  // namespace specwalk
