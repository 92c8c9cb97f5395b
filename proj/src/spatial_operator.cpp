#include "necklace/spatial_operator.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include <lapacke.h>

#include "necklace/errors.hpp"

namespace necklace {

std::string to_string(Dispersion d) { return d == Dispersion::exact ? "exact" : "second_order"; }

Dispersion dispersion_from_string(const std::string& s) {
  if (s == "exact") return Dispersion::exact;
  if (s == "second_order" || s == "fd") return Dispersion::second_order;
  throw DomainError("unknown dispersion '" + s + "'");
}

double exact_dispersion(double mu, double h) {
  const double r = std::clamp(0.5 * h * std::sqrt(std::max(mu, 0.0)), 0.0, 1.0);
  const double s = 2.0 / h * std::asin(r);
  return s * s;
}

SpatialOperator::SpatialOperator(const NecklaceGrid& grid, Dispersion dispersion)
    : grid_(grid), dispersion_(dispersion) {
  weights_ = quadrature_weights(grid, true);
  sqrt_weights_ = weights_.cwiseSqrt();
  stiffness_ = stiffness_matrix(grid, true);
  const auto n = weights_.size();
  const RealVector inv_sqrt = sqrt_weights_.cwiseInverse();

  fd_eigenvalues_.resize(n);
  modes_.resize(n, n);
  if (grid.boundary() == Boundary::dirichlet_truncation) {
    // The symmetric Dirichlet layout is a path: A is tridiagonal.
    std::vector<double> d(n), e(std::max<Eigen::Index>(n - 1, 1));
    for (Eigen::Index i = 0; i < n; ++i) d[i] = stiffness_.coeff(i, i) * inv_sqrt[i] * inv_sqrt[i];
    for (Eigen::Index i = 0; i + 1 < n; ++i) e[i] = stiffness_.coeff(i, i + 1) * inv_sqrt[i] * inv_sqrt[i + 1];
    const int info = LAPACKE_dstevd(LAPACK_COL_MAJOR, 'V', static_cast<lapack_int>(n), d.data(), e.data(),
                                    modes_.data(), static_cast<lapack_int>(n));
    if (info != 0) throw ConvergenceFailure("dstevd failed with info " + std::to_string(info));
    for (Eigen::Index i = 0; i < n; ++i) fd_eigenvalues_[i] = d[i];
  } else {
    modes_ = inv_sqrt.asDiagonal() * Eigen::MatrixXd(stiffness_) * inv_sqrt.asDiagonal();
    const int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'U', static_cast<lapack_int>(n), modes_.data(),
                                    static_cast<lapack_int>(n), fd_eigenvalues_.data());
    if (info != 0) throw ConvergenceFailure("dsyevd failed with info " + std::to_string(info));
  }
  fd_eigenvalues_ = fd_eigenvalues_.cwiseMax(0.0);

  eigenvalues_ = fd_eigenvalues_;
  if (dispersion_ == Dispersion::exact) {
    const double h = grid.step();
    for (Eigen::Index i = 0; i < n; ++i) eigenvalues_[i] = exact_dispersion(fd_eigenvalues_[i], h);
  }
}

Eigen::MatrixXd SpatialOperator::to_modal(const Eigen::MatrixXd& nodal) const {
  if (nodal.rows() != size()) throw GridMismatch("to_modal: length does not match the operator");
  return modes_.transpose() * (sqrt_weights_.asDiagonal() * nodal);
}

Eigen::MatrixXd SpatialOperator::from_modal(const Eigen::MatrixXd& modal) const {
  if (modal.rows() != size()) throw GridMismatch("from_modal: length does not match the operator");
  return sqrt_weights_.cwiseInverse().asDiagonal() * (modes_ * modal);
}

Eigen::MatrixXd SpatialOperator::apply(const Eigen::MatrixXd& nodal) const {
  if (nodal.rows() != size()) throw GridMismatch("apply: length does not match the operator");
  if (dispersion_ == Dispersion::second_order)
    return weights_.cwiseInverse().asDiagonal() * (stiffness_ * nodal);
  return from_modal(eigenvalues_.asDiagonal() * to_modal(nodal));
}

double SpatialOperator::dirichlet_form(const RealVector& nodal) const {
  if (dispersion_ == Dispersion::second_order) return nodal.dot(stiffness_ * nodal);
  const RealVector c = to_modal(nodal);
  return c.dot(eigenvalues_.asDiagonal() * c);
}

}  // namespace necklace
