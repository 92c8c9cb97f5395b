#include "necklace/linalg.hpp"

#include <cmath>
#include <vector>

namespace necklace {

KrylovResult gmres(const LinearMap& A, const LinearMap& precond, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                   double tol, int max_iter, int restart) {
  KrylovResult res;
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero(b.size());
    res.converged = true;
    return res;
  }
  if (x.size() != b.size()) x.setZero(b.size());

  while (res.iterations < max_iter) {
    Eigen::VectorXd r = b - A(x);
    double beta = r.norm();
    res.relative_residual = beta / bnorm;
    if (res.relative_residual <= tol) {
      res.converged = true;
      return res;
    }
    const int m = restart;
    std::vector<Eigen::VectorXd> V;
    V.reserve(m + 1);
    V.push_back(r / beta);
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(m + 1, m);
    Eigen::VectorXd cs = Eigen::VectorXd::Zero(m), sn = Eigen::VectorXd::Zero(m);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m + 1);
    g[0] = beta;
    int k = 0;
    for (; k < m && res.iterations < max_iter; ++k, ++res.iterations) {
      Eigen::VectorXd w = A(precond(V[k]));
      for (int i = 0; i <= k; ++i) {  // modified Gram-Schmidt
        H(i, k) = w.dot(V[i]);
        w -= H(i, k) * V[i];
      }
      H(k + 1, k) = w.norm();
      for (int i = 0; i < k; ++i) {
        const double t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
        H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
        H(i, k) = t;
      }
      const double rr = std::hypot(H(k, k), H(k + 1, k));
      cs[k] = H(k, k) / rr;
      sn[k] = H(k + 1, k) / rr;
      H(k, k) = rr;
      H(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      res.relative_residual = std::abs(g[k + 1]) / bnorm;
      const double hnext = w.norm();
      if (res.relative_residual <= tol || hnext == 0.0) {
        ++k;
        ++res.iterations;
        break;
      }
      V.push_back(w / hnext);
    }
    const Eigen::VectorXd y =
        H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    Eigen::VectorXd z = Eigen::VectorXd::Zero(b.size());
    for (int i = 0; i < k; ++i) z += y[i] * V[i];
    x += precond(z);
    if (res.relative_residual <= tol) {
      res.relative_residual = (b - A(x)).norm() / bnorm;
      res.converged = res.relative_residual <= 10.0 * tol;
      if (res.converged) return res;
    }
  }
  return res;
}

KrylovResult pcg(const LinearMap& A, const LinearMap& precond, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                 double tol, int max_iter) {
  KrylovResult res;
  const double bnorm = b.norm();
  x.setZero(b.size());
  if (bnorm == 0.0) {
    res.converged = true;
    return res;
  }
  Eigen::VectorXd r = b;
  Eigen::VectorXd z = precond(r);
  Eigen::VectorXd p = z;
  double rz = r.dot(z);
  for (; res.iterations < max_iter; ++res.iterations) {
    const Eigen::VectorXd Ap = A(p);
    const double curv = p.dot(Ap);
    if (!(curv > 0.0)) {
      res.negative_curvature = true;
      if (res.iterations == 0) x = z;  // preconditioned steepest direction
      return res;
    }
    const double alpha = rz / curv;
    x += alpha * p;
    r -= alpha * Ap;
    res.relative_residual = r.norm() / bnorm;
    if (res.relative_residual <= tol) {
      res.converged = true;
      ++res.iterations;
      return res;
    }
    z = precond(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
  }
  return res;
}

}  // namespace necklace
