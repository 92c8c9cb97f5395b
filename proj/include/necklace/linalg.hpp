#pragma once

// Matrix-free Krylov solvers used by the breather solver.

#include <functional>

#include <Eigen/Dense>

namespace necklace {

using LinearMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct KrylovResult {
  int iterations = 0;
  double relative_residual = 0.0;
  bool converged = false;
  bool negative_curvature = false;  // cg only
};

/// Restarted GMRES with right preconditioning: solves A x = b, x holds the start.
KrylovResult gmres(const LinearMap& A, const LinearMap& precond, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                   double tol, int max_iter, int restart = 60);

/// Preconditioned CG for symmetric positive definite A. Stops at the first direction
/// of non-positive curvature and returns the iterate built so far.
KrylovResult pcg(const LinearMap& A, const LinearMap& precond, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                 double tol, int max_iter);

}  // namespace necklace
