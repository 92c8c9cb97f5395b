#pragma once

// Time-Fourier Galerkin discretization of
//   u_tt - Delta u + alpha u = +-|u|^{p-1} u
// with the time-even ansatz u(x, t) = sum_j a_j(x) cos(k_j omega t), k_j = kappa (2j - 1),
// on the symmetric subspace of a truncated necklace grid.
//
// Normalization. With T = 2 pi / omega and <u, v>_st = (T/2) sum_j <a_j, b_j>,
//   J0[u] = (T/2) sum_j b_{L_j}(a_j, a_j),   J1[u] = 2/(p+1) int_0^T int |u|^{p+1},
//   J = J0 - J1 (focusing, "+" in the equation) or J0 + J1 (defocusing),
// so that the Riesz gradient is dJ = 2 (L u -+ |u|^{p-1} u) and critical points are
// discrete weak solutions. The minimization works with the oriented functional
// Jhat = sigma J (sigma = +1 focusing, -1 defocusing), whose positive space H+ is
// {sigma (lambda - omega^2 k^2 + alpha) > 0}; for the defocusing sign this swaps the
// roles of the two spectral subspaces.
//
// Internally every harmonic is stored in scaled modal coordinates c = V^T W^{1/2} a
// of the SpatialOperator, where L_j is diagonal with entries d_ij = lambda_i + alpha - omega^2 k_j^2.

#include <memory>
#include <string>
#include <vector>

#include "necklace/gapcheck.hpp"
#include "necklace/graph.hpp"
#include "necklace/spatial_operator.hpp"

namespace necklace {

enum class Nonlinearity { focusing, defocusing };

std::string to_string(Nonlinearity s);
Nonlinearity nonlinearity_from_string(const std::string& s);

struct TimeFourierField {
  FrequencyConfig config;
  NecklaceGrid grid;
  Eigen::MatrixXd coefficients;  // column j - 1 holds a_j (symmetric nodal layout)

  static TimeFourierField zero(const FrequencyConfig& config, const NecklaceGrid& grid);

  int harmonic_count() const { return static_cast<int>(coefficients.cols()); }
  int harmonic(int j) const { return config.kappa * (2 * j - 1); }
  /// kappa omega: frequency of the lowest retained harmonic.
  double fundamental_frequency() const { return config.kappa * config.omega(); }
  double period() const;      // 2 pi / (kappa omega)
  double antiperiod() const;  // u(t + antiperiod) = -u(t)

  RealVector evaluate(double t) const;
  RealVector time_derivative(double t) const;
  GraphFunction harmonic_function(int j) const;
  double max_abs() const { return coefficients.size() ? coefficients.cwiseAbs().maxCoeff() : 0.0; }
};

struct SolverOptions {
  Dispersion dispersion = Dispersion::exact;
  int time_samples = 0;  // 0 selects 8 J
  double pivot_tol = 1e-10;
  double inner_tol = 1e-10;
  int inner_max_iter = 200;
  double outer_tol = 1e-7;
  int outer_max_iter = 2000;
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  double jacobian_regularization = 1e-14;
  bool newton_continuation = false;  // grow the harmonic count from 1
  bool newton_nehari_start = true;   // start Newton from m1(start)
  double seed_amplitude = 1.0;
  double seed_width_cells = 1.0;
  double seed_center = 1.5707963267948966;  // midpoint of the link edge of cell 0 (a reflection axis)
  int threads = 1;
};

struct Diagnostics {
  double pde_residual = 0.0;   // ||L u -+ N(u)|| / ||u||, discrete L2 in space, exact in time
  double nehari_self = 0.0;    // |J'(u) u| / ||u||^2_st
  double nehari_minus = 0.0;   // sup over H- of |J'(u) v| / ||v||_st, divided by ||u||_st
  double J_value = 0.0;        // J = J0 -+ J1
  double oriented_J = 0.0;     // sigma J
  double lp_integral = 0.0;    // int_0^T int |u|^{p+1}
  double ground_state_defect = 0.0;  // |sigma J - (p-1)/(p+1) lp_integral| / |sigma J|
  double calH_norm = 0.0;
  double H_norm = 0.0;
  double embedding_ratio = 0.0;  // H_norm / calH_norm
  double l2_norm = 0.0;          // sqrt(sum_j ||a_j||^2)
  std::vector<double> cell_mass;  // time-averaged L2 mass of cell n at index n + N
  std::vector<double> tail_mass;  // tail_mass[n0] = mass(|n| >= n0) / total
  std::vector<VertexFlux> flux;   // max over harmonics at each vertex
  double flux_residual_max = 0.0;
  double dropped_harmonic_ratio = 0.0;
  double min_abs_eigenvalue = 0.0;  // discrete delta*_h
  int negative_modes = 0;           // total count of negative L_j eigenvalues
  int expected_negative_modes = -1; // Bloch-lattice count (periodic grids only)
  int dominant_harmonic = 1;
};

enum class Method { nehari, newton, inner };

std::string to_string(Method m);

struct IterationRecord {
  int iteration = 0;
  double value = 0.0;     // oriented J
  double residual = 0.0;  // reduced gradient (nehari) or ||F|| / ||u|| (newton)
  double step = 0.0;
};

struct BreatherState {
  TimeFourierField field;
  Diagnostics diagnostics;
  Method method = Method::nehari;
  Nonlinearity sign = Nonlinearity::focusing;
  bool converged = false;
  int iterations = 0;
  std::vector<IterationRecord> history;
  std::string message;
  double scale = 0.0;  // inner maximization: coefficient s of w
};

struct HarmonicNorms {
  double calH = 0.0;
  double H = 0.0;
  double ratio = 0.0;
};

class BreatherProblem {
 public:
  BreatherProblem(const FrequencyConfig& config, const NecklaceGrid& grid, Nonlinearity sign,
                  SolverOptions options = {}, SpatialOperatorPtr op = nullptr);

  const FrequencyConfig& config() const { return config_; }
  const NecklaceGrid& grid() const { return op_->grid(); }
  Nonlinearity sign() const { return sign_; }
  double orientation() const { return sign_ == Nonlinearity::focusing ? 1.0 : -1.0; }
  const SolverOptions& options() const { return options_; }
  const SpatialOperatorPtr& spatial_operator() const { return op_; }
  int harmonic_count() const { return J_; }
  int time_samples() const { return Nt_; }
  double time_period() const { return T_; }  // 2 pi / omega
  /// d(i, j - 1) = lambda_i + alpha - omega^2 k_j^2
  const Eigen::MatrixXd& shifted_eigenvalues() const { return d_; }
  double min_abs_eigenvalue() const { return d_.cwiseAbs().minCoeff(); }
  /// Throws DiscreteResonance when some |d_ij| < pivot_tol.
  void require_nonresonant() const;

  /// Symmetric form matrix K + (alpha - omega^2 k^2) W of L_k (second-order stencil).
  SparseMatrix assemble_Lk(int k) const;
  /// L_k applied to nodal values with the configured dispersion.
  RealVector apply_Lk(int k, const RealVector& a) const;

  TimeFourierField apply_L(const TimeFourierField& u) const;
  TimeFourierField linear_resolve(const TimeFourierField& f) const;
  /// +-|u|^{p-1} u projected on the retained harmonics (sign of the equation's right side).
  TimeFourierField nonlinear_term(const TimeFourierField& u) const;

  double evaluate_J(const TimeFourierField& u) const;
  TimeFourierField evaluate_dJ(const TimeFourierField& u) const;
  double lp_integral(const TimeFourierField& u) const;
  double st_inner(const TimeFourierField& u, const TimeFourierField& v) const;

  /// Spectral projection of every harmonic onto the positive (plus) or negative
  /// eigenspace of L_k (not oriented).
  TimeFourierField project(const TimeFourierField& u, ModeSign s) const;
  int negative_mode_count() const;
  int expected_negative_modes() const;

  HarmonicNorms norms(const TimeFourierField& u) const;
  Diagnostics diagnose(const TimeFourierField& u) const;

  /// Gaussian envelope centred at options().seed_center times the band-edge Bloch wave closest to
  /// omega kappa on the positive side; single harmonic, projected on H+.
  TimeFourierField seed() const;

  /// m1(w): maximizer of Jhat on R+ w+ (+) H-. With freeze_negative the H- part is held at 0.
  BreatherState inner_maximize(const TimeFourierField& w, bool freeze_negative = false) const;
  BreatherState nehari_minimize(const TimeFourierField& start) const;
  BreatherState newton_solve(const TimeFourierField& start) const;

  TimeFourierField from_modal(const Eigen::MatrixXd& c) const;
  Eigen::MatrixXd to_modal(const TimeFourierField& u) const;

 private:
  struct Inner {
    double s = 0.0;
    Eigen::MatrixXd v;  // H- part
    Eigen::MatrixXd c;  // s w + v
    Eigen::MatrixXd e;  // Euclidean gradient of Jhat at c
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
  };

  Eigen::MatrixXd nodal(const Eigen::MatrixXd& c) const;
  Eigen::MatrixXd time_samples_of(const Eigen::MatrixXd& a) const;  // n x Nt
  double lp_modal(const Eigen::MatrixXd& c) const;
  double oriented_value(const Eigen::MatrixXd& c) const;
  // modal projection of |u|^{p-1} u (no sign); optionally the nodal samples are returned
  Eigen::MatrixXd nonlinearity_modal(const Eigen::MatrixXd& c, Eigen::MatrixXd* samples = nullptr) const;
  Eigen::MatrixXd gradient_modal(const Eigen::MatrixXd& c, Eigen::MatrixXd* samples = nullptr) const;
  Eigen::MatrixXd derivative_modal(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& dc,
                                   bool regularize) const;
  Inner maximize_modal(const Eigen::MatrixXd& w, double s0, const Eigen::MatrixXd& v0, bool freeze) const;
  BreatherState make_state(const Eigen::MatrixXd& c, Method m) const;

  FrequencyConfig config_;
  Nonlinearity sign_;
  SolverOptions options_;
  SpatialOperatorPtr op_;
  int J_ = 0;
  int Nt_ = 0;
  double T_ = 0.0;
  Eigen::MatrixXd d_;        // n x J shifted eigenvalues
  Eigen::MatrixXd cos_;      // Nt x J, cos((2j - 1) theta_q)
  Eigen::MatrixXd pos_mask_; // oriented H+ indicator
};

}  // namespace necklace
