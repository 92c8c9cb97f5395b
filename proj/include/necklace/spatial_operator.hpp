#pragma once

// Spectral representation of -Delta on the symmetric subspace of a grid.
//
// With lumped mass W and stiffness K the discrete operator -Delta_h = W^{-1} K is
// self-adjoint in the W inner product; A = W^{-1/2} K W^{-1/2} = V diag(mu) V^T.
// On an equilateral graph the eigenvectors of A are exact samples of continuum
// eigenfunctions, mu = (4/h^2) sin^2(s h / 2) for the continuum value s^2. The
// "exact" dispersion replaces mu by that s^2, which keeps the eigenvectors and
// removes the O(h^2) shift of the band edges.

#include <memory>
#include <string>

#include "necklace/graph.hpp"

namespace necklace {

enum class Dispersion { second_order, exact };

std::string to_string(Dispersion d);
Dispersion dispersion_from_string(const std::string& s);

/// Continuum eigenvalue s^2 for a second-order eigenvalue mu on spacing h.
double exact_dispersion(double mu, double h);

class SpatialOperator {
 public:
  explicit SpatialOperator(const NecklaceGrid& grid, Dispersion dispersion = Dispersion::exact);

  const NecklaceGrid& grid() const { return grid_; }
  Dispersion dispersion() const { return dispersion_; }
  Eigen::Index size() const { return weights_.size(); }

  const RealVector& weights() const { return weights_; }
  const RealVector& sqrt_weights() const { return sqrt_weights_; }
  const SparseMatrix& stiffness() const { return stiffness_; }
  /// Orthonormal eigenvectors of W^{-1/2} K W^{-1/2}, ascending eigenvalues.
  const Eigen::MatrixXd& modes() const { return modes_; }
  const RealVector& fd_eigenvalues() const { return fd_eigenvalues_; }
  /// Eigenvalues of the operator in use (fd_eigenvalues mapped by the dispersion).
  const RealVector& eigenvalues() const { return eigenvalues_; }
  double max_eigenvalue() const { return eigenvalues_.maxCoeff(); }

  /// Scaled modal coordinates V^T W^{1/2} X; the W inner product becomes Euclidean.
  Eigen::MatrixXd to_modal(const Eigen::MatrixXd& nodal) const;
  Eigen::MatrixXd from_modal(const Eigen::MatrixXd& modal) const;

  /// -Delta applied column-wise to nodal vectors.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& nodal) const;

  /// Integral of |u'|^2 under the operator in use.
  double dirichlet_form(const RealVector& nodal) const;

 private:
  NecklaceGrid grid_;
  Dispersion dispersion_;
  RealVector weights_, sqrt_weights_;
  SparseMatrix stiffness_;
  Eigen::MatrixXd modes_;
  RealVector fd_eigenvalues_, eigenvalues_;
};

using SpatialOperatorPtr = std::shared_ptr<const SpatialOperator>;

}  // namespace necklace
