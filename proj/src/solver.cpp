#include "necklace/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "necklace/errors.hpp"
#include "necklace/linalg.hpp"
#include "necklace/spectrum.hpp"

namespace necklace {

namespace {

constexpr double pi = std::numbers::pi;

// |u|^{q} elementwise; q = 2 and q = 4 avoid pow
Eigen::ArrayXXd abs_pow(const Eigen::ArrayXXd& u, double q) {
  if (q == 2.0) return u.square();
  if (q == 4.0) return u.square().square();
  return u.abs().pow(q);
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) { return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size()); }

Eigen::MatrixXd unflatten(const Eigen::VectorXd& v, Eigen::Index rows, Eigen::Index cols) {
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

}  // namespace

std::string to_string(Nonlinearity s) { return s == Nonlinearity::focusing ? "focusing" : "defocusing"; }

Nonlinearity nonlinearity_from_string(const std::string& s) {
  if (s == "focusing" || s == "+" || s == "plus") return Nonlinearity::focusing;
  if (s == "defocusing" || s == "-" || s == "minus") return Nonlinearity::defocusing;
  throw DomainError("unknown sign '" + s + "' (expected focusing or defocusing)");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::nehari: return "nehari";
    case Method::newton: return "newton";
    case Method::inner: return "inner";
  }
  return "?";
}

// ---------------------------------------------------------------------------

TimeFourierField TimeFourierField::zero(const FrequencyConfig& config, const NecklaceGrid& grid) {
  config.validate();
  TimeFourierField f;
  f.config = config;
  f.grid = grid;
  f.coefficients = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(grid.dof_count(true)), config.harmonic_count());
  return f;
}

double TimeFourierField::period() const { return 2.0 * pi / fundamental_frequency(); }
double TimeFourierField::antiperiod() const { return 0.5 * period(); }

RealVector TimeFourierField::evaluate(double t) const {
  RealVector u = RealVector::Zero(coefficients.rows());
  const double w = config.omega();
  for (int j = 1; j <= harmonic_count(); ++j) u += std::cos(harmonic(j) * w * t) * coefficients.col(j - 1);
  return u;
}

RealVector TimeFourierField::time_derivative(double t) const {
  RealVector v = RealVector::Zero(coefficients.rows());
  const double w = config.omega();
  for (int j = 1; j <= harmonic_count(); ++j)
    v -= harmonic(j) * w * std::sin(harmonic(j) * w * t) * coefficients.col(j - 1);
  return v;
}

GraphFunction TimeFourierField::harmonic_function(int j) const {
  return GraphFunction::from_real(grid, true, coefficients.col(j - 1));
}

// ---------------------------------------------------------------------------

BreatherProblem::BreatherProblem(const FrequencyConfig& config, const NecklaceGrid& grid, Nonlinearity sign,
                                 SolverOptions options, SpatialOperatorPtr op)
    : config_(config), sign_(sign), options_(options), op_(std::move(op)) {
  config_.validate();
  if (!op_) {
    op_ = std::make_shared<SpatialOperator>(grid, options_.dispersion);
  } else if (!(op_->grid() == grid) || op_->dispersion() != options_.dispersion) {
    throw GridMismatch("spatial operator does not match the grid or dispersion");
  }
  J_ = config_.harmonic_count();
  if (options_.time_samples == 0) Nt_ = 8 * J_;
  else if (options_.time_samples >= 4 * J_) Nt_ = options_.time_samples;
  else throw DomainError("time_samples must be at least 4 J");
  const double w = config_.omega();
  T_ = 2.0 * pi / w;

  const auto n = op_->size();
  d_.resize(n, J_);
  for (int j = 0; j < J_; ++j) {
    const double k = config_.kappa * (2.0 * j + 1.0);
    d_.col(j) = op_->eigenvalues().array() + (config_.alpha - w * w * k * k);
  }
  cos_.resize(Nt_, J_);
  for (int q = 0; q < Nt_; ++q) {
    const double theta = pi * (q + 0.5) / Nt_;
    for (int j = 0; j < J_; ++j) cos_(q, j) = std::cos((2.0 * j + 1.0) * theta);
  }
  pos_mask_ = ((orientation() * d_.array()) > 0.0).cast<double>().matrix();
}

void BreatherProblem::require_nonresonant() const {
  const double m = min_abs_eigenvalue();
  if (m < options_.pivot_tol) {
    std::ostringstream msg;
    msg << "discrete resonance: min |lambda_i + alpha - omega^2 k^2| = " << m << " below pivot tolerance "
        << options_.pivot_tol << "; refine the grid or re-certify";
    throw DiscreteResonance(msg.str());
  }
}

SparseMatrix BreatherProblem::assemble_Lk(int k) const {
  const double w = config_.omega();
  SparseMatrix L = op_->stiffness();
  SparseMatrix Wm(L.rows(), L.cols());
  Wm.reserve(Eigen::VectorXi::Constant(L.cols(), 1));
  for (Eigen::Index i = 0; i < L.rows(); ++i) Wm.insert(i, i) = op_->weights()[i];
  return L + (config_.alpha - w * w * double(k) * k) * Wm;
}

RealVector BreatherProblem::apply_Lk(int k, const RealVector& a) const {
  const double w = config_.omega();
  return op_->apply(a) + (config_.alpha - w * w * double(k) * k) * a;
}

Eigen::MatrixXd BreatherProblem::to_modal(const TimeFourierField& u) const {
  if (!(u.grid == grid())) throw GridMismatch("field grid does not match the problem");
  if (u.harmonic_count() != J_) throw GridMismatch("field harmonic count does not match the problem");
  return op_->to_modal(u.coefficients);
}

TimeFourierField BreatherProblem::from_modal(const Eigen::MatrixXd& c) const {
  TimeFourierField f;
  f.config = config_;
  f.grid = grid();
  f.coefficients = op_->from_modal(c);
  return f;
}

Eigen::MatrixXd BreatherProblem::nodal(const Eigen::MatrixXd& c) const { return op_->from_modal(c); }

Eigen::MatrixXd BreatherProblem::time_samples_of(const Eigen::MatrixXd& a) const { return a * cos_.transpose(); }

double BreatherProblem::lp_modal(const Eigen::MatrixXd& c) const {
  const Eigen::MatrixXd U = time_samples_of(nodal(c));
  const Eigen::VectorXd mean = abs_pow(U.array(), config_.p + 1.0).rowwise().mean();
  return T_ * op_->weights().dot(mean);
}

double BreatherProblem::oriented_value(const Eigen::MatrixXd& c) const {
  const double quad = 0.5 * T_ * orientation() * (d_.array() * c.array().square()).sum();
  return quad - 2.0 / (config_.p + 1.0) * lp_modal(c);
}

Eigen::MatrixXd BreatherProblem::nonlinearity_modal(const Eigen::MatrixXd& c, Eigen::MatrixXd* samples) const {
  const Eigen::MatrixXd U = time_samples_of(nodal(c));
  const Eigen::MatrixXd F = (abs_pow(U.array(), config_.p - 1.0) * U.array()).matrix();
  const Eigen::MatrixXd N = F * cos_ * (2.0 / Nt_);
  if (samples) *samples = U;
  return op_->to_modal(N);
}

Eigen::MatrixXd BreatherProblem::gradient_modal(const Eigen::MatrixXd& c, Eigen::MatrixXd* samples) const {
  const Eigen::MatrixXd n = nonlinearity_modal(c, samples);
  return T_ * (orientation() * d_.cwiseProduct(c) - n);
}

Eigen::MatrixXd BreatherProblem::derivative_modal(const Eigen::MatrixXd& U, const Eigen::MatrixXd& dc,
                                                  bool regularize) const {
  const double p = config_.p;
  Eigen::ArrayXXd g;
  if (regularize && p < 2.0)
    g = (U.array().square() + options_.jacobian_regularization).pow(0.5 * (p - 1.0));
  else
    g = abs_pow(U.array(), p - 1.0);
  const Eigen::MatrixXd dU = time_samples_of(nodal(dc));
  const Eigen::MatrixXd G = (p * g * dU.array()).matrix();
  return op_->to_modal(G * cos_ * (2.0 / Nt_));
}

TimeFourierField BreatherProblem::apply_L(const TimeFourierField& u) const {
  TimeFourierField out = u;
  for (int j = 1; j <= J_; ++j) out.coefficients.col(j - 1) = apply_Lk(u.harmonic(j), u.coefficients.col(j - 1));
  return out;
}

TimeFourierField BreatherProblem::linear_resolve(const TimeFourierField& f) const {
  require_nonresonant();
  const Eigen::MatrixXd c = to_modal(f).cwiseQuotient(d_);
  TimeFourierField v = from_modal(c);
  const RealVector& w = op_->weights();
  const TimeFourierField back = apply_L(v);
  for (int j = 0; j < J_; ++j) {
    const RealVector r = back.coefficients.col(j) - f.coefficients.col(j);
    const double rn = std::sqrt(r.dot(w.asDiagonal() * r));
    const double fn = std::sqrt(f.coefficients.col(j).dot(w.asDiagonal() * f.coefficients.col(j)));
    if (rn > 1e-10 * fn + 1e-300) {
      std::ostringstream msg;
      msg << "linear_resolve: residual " << rn / std::max(fn, 1e-300) << " in harmonic " << j + 1;
      throw DiscreteResonance(msg.str());
    }
  }
  return v;
}

TimeFourierField BreatherProblem::nonlinear_term(const TimeFourierField& u) const {
  if (!(u.grid == grid()) || u.harmonic_count() != J_) throw GridMismatch("nonlinear_term: field layout");
  const Eigen::MatrixXd U = time_samples_of(u.coefficients);
  const Eigen::MatrixXd F = (abs_pow(U.array(), config_.p - 1.0) * U.array()).matrix();
  TimeFourierField out = u;
  out.coefficients = orientation() * F * cos_ * (2.0 / Nt_);
  return out;
}

double BreatherProblem::lp_integral(const TimeFourierField& u) const {
  if (!(u.grid == grid()) || u.harmonic_count() != J_) throw GridMismatch("lp_integral: field layout");
  const Eigen::MatrixXd U = time_samples_of(u.coefficients);
  const Eigen::VectorXd mean = abs_pow(U.array(), config_.p + 1.0).rowwise().mean();
  return T_ * op_->weights().dot(mean);
}

double BreatherProblem::evaluate_J(const TimeFourierField& u) const {
  return orientation() * oriented_value(to_modal(u));
}

TimeFourierField BreatherProblem::evaluate_dJ(const TimeFourierField& u) const {
  const Eigen::MatrixXd c = to_modal(u);
  // Riesz gradient in <.,.>_st: (2/T) times the Euclidean gradient, sign undone
  return from_modal(orientation() * (2.0 / T_) * gradient_modal(c));
}

double BreatherProblem::st_inner(const TimeFourierField& u, const TimeFourierField& v) const {
  const RealVector& w = op_->weights();
  return 0.5 * T_ * (u.coefficients.transpose() * w.asDiagonal() * v.coefficients).trace();
}

TimeFourierField BreatherProblem::project(const TimeFourierField& u, ModeSign s) const {
  require_nonresonant();
  const int expected = expected_negative_modes();
  if (expected >= 0 && expected != negative_mode_count()) {
    std::ostringstream msg;
    msg << "negative-mode count " << negative_mode_count() << " differs from the Bloch-lattice count " << expected;
    throw CertificationFailure(msg.str());
  }
  const Eigen::MatrixXd mask =
      ((static_cast<double>(static_cast<int>(s)) * d_.array()) > 0.0).cast<double>().matrix();
  return from_modal(to_modal(u).cwiseProduct(mask));
}

int BreatherProblem::negative_mode_count() const { return static_cast<int>((d_.array() < 0.0).count()); }

int BreatherProblem::expected_negative_modes() const {
  if (grid().boundary() != Boundary::periodic_cells) return -1;
  const int C = grid().cell_count();
  const int M = grid().points_per_edge();
  int total = 0;
  // bands |m| <= (k k0 - 1)/2 lie below omega^2 k^2 - alpha: k k0 bands, each with C lattice points
  for (int j = 1; j <= J_; ++j) total += C * std::min(config_.harmonic(j) * config_.k0, 2 * M);
  return total;
}

HarmonicNorms BreatherProblem::norms(const TimeFourierField& u) const {
  const Eigen::MatrixXd c = to_modal(u);
  HarmonicNorms h;
  double calH2 = 0.0, H2 = 0.0;
  const RealVector& lam = op_->eigenvalues();
  for (int j = 0; j < J_; ++j) {
    const double k = u.harmonic(j + 1);
    const Eigen::ArrayXd c2 = c.col(j).array().square();
    calH2 += 0.5 * (d_.col(j).array().abs() * c2).sum();
    H2 += 0.5 * ((lam.array() * c2).sum() / k + k * c2.sum());
  }
  h.calH = std::sqrt(calH2);
  h.H = std::sqrt(H2);
  h.ratio = h.calH > 0.0 ? h.H / h.calH : 0.0;
  return h;
}

Diagnostics BreatherProblem::diagnose(const TimeFourierField& u) const {
  Diagnostics dg;
  const Eigen::MatrixXd c = to_modal(u);
  const double sigma = orientation();
  const double cn = c.norm();
  Eigen::MatrixXd U;
  const Eigen::MatrixXd n = nonlinearity_modal(c, &U);
  const Eigen::MatrixXd F = sigma * d_.cwiseProduct(c) - n;  // sigma (L u -+ N)
  const Eigen::MatrixXd e = T_ * F;
  const Eigen::MatrixXd neg = Eigen::MatrixXd::Ones(d_.rows(), d_.cols()) - pos_mask_;

  dg.pde_residual = cn > 0.0 ? F.norm() / cn : 0.0;
  dg.nehari_self = cn > 0.0 ? std::abs((e.array() * c.array()).sum()) / (0.5 * T_ * cn * cn) : 0.0;
  dg.nehari_minus = cn > 0.0 ? (2.0 / T_) * e.cwiseProduct(neg).norm() / cn : 0.0;
  dg.lp_integral = T_ * op_->weights().dot(abs_pow(U.array(), config_.p + 1.0).rowwise().mean().matrix());
  dg.oriented_J = 0.5 * T_ * sigma * (d_.array() * c.array().square()).sum() - 2.0 / (config_.p + 1.0) * dg.lp_integral;
  dg.J_value = sigma * dg.oriented_J;
  const double gs = (config_.p - 1.0) / (config_.p + 1.0) * dg.lp_integral;
  dg.ground_state_defect =
      std::abs(dg.oriented_J) > 0.0 ? std::abs(dg.oriented_J - gs) / std::abs(dg.oriented_J) : std::abs(gs);

  const HarmonicNorms h = norms(u);
  dg.calH_norm = h.calH;
  dg.H_norm = h.H;
  dg.embedding_ratio = h.ratio;

  // spatial mass per cell, time averaged (factor 1/2 per cosine)
  const RealVector& w = op_->weights();
  const NecklaceGrid& g = grid();
  const int C = g.cell_count();
  const auto S = static_cast<Eigen::Index>(g.cell_stride(true));
  const Eigen::Index offset = g.boundary() == Boundary::dirichlet_truncation ? 1 : 0;
  dg.cell_mass.assign(C, 0.0);
  const Eigen::VectorXd point_mass = 0.5 * (u.coefficients.array().square().rowwise().sum()).matrix();
  for (Eigen::Index i = 0; i < point_mass.size(); ++i) dg.cell_mass[(i + offset) / S] += w[i] * point_mass[i];
  double total = 0.0;
  for (double m : dg.cell_mass) total += m;
  dg.l2_norm = std::sqrt(u.coefficients.cwiseProduct(w.asDiagonal() * u.coefficients).sum());
  const int N = g.half_width();
  dg.tail_mass.assign(N + 1, 0.0);
  for (int n0 = 0; n0 <= N; ++n0) {
    double t = 0.0;
    for (int cidx = 0; cidx < C; ++cidx)
      if (std::abs(g.first_cell() + cidx) >= n0) t += dg.cell_mass[cidx];
    dg.tail_mass[n0] = total > 0.0 ? t / total : 0.0;
  }

  dg.flux.clear();
  for (int j = 1; j <= J_; ++j) {
    const auto f = kirchhoff_flux_residual(u.harmonic_function(j));
    if (dg.flux.empty()) dg.flux = f;
    else
      for (std::size_t i = 0; i < f.size(); ++i) dg.flux[i].residual = std::max(dg.flux[i].residual, f[i].residual);
  }
  for (const auto& f : dg.flux) dg.flux_residual_max = std::max(dg.flux_residual_max, f.residual);

  // Energy of the nonlinearity in harmonics beyond the truncation, from a 4x finer time grid.
  {
    const int Jf = 4 * J_, Ntf = 4 * Nt_;
    Eigen::MatrixXd cf(Ntf, Jf);
    for (int q = 0; q < Ntf; ++q)
      for (int j = 0; j < Jf; ++j) cf(q, j) = std::cos((2.0 * j + 1.0) * pi * (q + 0.5) / Ntf);
    const Eigen::MatrixXd Uf = u.coefficients * cf.leftCols(J_).transpose();
    const Eigen::MatrixXd Ff = (abs_pow(Uf.array(), config_.p - 1.0) * Uf.array()).matrix();
    const Eigen::MatrixXd P = Ff * cf * (2.0 / Ntf);
    const double kept = P.leftCols(J_).cwiseProduct(w.asDiagonal() * P.leftCols(J_)).sum();
    const double dropped = P.rightCols(Jf - J_).cwiseProduct(w.asDiagonal() * P.rightCols(Jf - J_)).sum();
    dg.dropped_harmonic_ratio = kept > 0.0 ? std::sqrt(dropped / kept) : 0.0;
  }

  dg.min_abs_eigenvalue = min_abs_eigenvalue();
  dg.negative_modes = negative_mode_count();
  dg.expected_negative_modes = expected_negative_modes();
  double best = -1.0;
  for (int j = 0; j < J_; ++j) {
    const double m = u.coefficients.col(j).dot(w.asDiagonal() * u.coefficients.col(j));
    if (m > best) {
      best = m;
      dg.dominant_harmonic = j + 1;
    }
  }
  return dg;
}

TimeFourierField BreatherProblem::seed() const {
  const double w = config_.omega();
  const double tau = w * w * double(config_.kappa) * config_.kappa - config_.alpha;
  const bool above = sign_ == Nonlinearity::focusing;
  int best_m = 0;
  double best_l = 0.0, best_lambda = above ? std::numeric_limits<double>::infinity() : -1.0;
  const int mmax = static_cast<int>(w * config_.kappa) + 3;
  for (int m = -mmax; m <= mmax; ++m)
    for (double l : {0.0, 0.5}) {
      const double lam = band_closed_form(m, l).lambda;
      if (l == 0.0 && m < 0) continue;  // same edge as +|m|; use the cosine mode
      if (above ? (lam > tau && lam < best_lambda) : (lam < tau && lam > best_lambda)) {
        best_lambda = lam;
        best_m = m;
        best_l = l;
      }
    }
  if (!above && best_lambda < 0.0) throw DomainError("seed: no band edge below omega^2 kappa^2 - alpha");
  const BlochEigenfunction phi = bloch_eigenfunction(best_m, best_l);
  const double sigma_x = options_.seed_width_cells * 2.0 * pi;
  const double x0 = options_.seed_center;
  const GraphFunction carrier = GraphFunction::sample(grid(), true, [&](int n, Edge e, double x) {
    const double local = x - 2.0 * pi * n;
    const std::complex<double> g =
        phi.bloch_wave(e == Edge::link, local) * std::exp(std::complex<double>(0.0, 2.0 * pi * best_l * n));
    const double env = std::exp(-(x - x0) * (x - x0) / (2.0 * sigma_x * sigma_x));
    return std::complex<double>(env * g.real(), 0.0);
  });
  TimeFourierField f = TimeFourierField::zero(config_, grid());
  f.coefficients.col(0) = carrier.real();
  Eigen::MatrixXd c = to_modal(f).cwiseProduct(pos_mask_);
  f = from_modal(c);
  const double peak = f.max_abs();
  if (peak > 0.0) f.coefficients *= options_.seed_amplitude / peak;
  return f;
}

// ---------------------------------------------------------------------------

BreatherProblem::Inner BreatherProblem::maximize_modal(const Eigen::MatrixXd& w, double s0, const Eigen::MatrixXd& v0,
                                                       bool freeze) const {
  const auto n = d_.rows();
  const Eigen::MatrixXd neg =
      freeze ? Eigen::MatrixXd::Zero(n, J_) : Eigen::MatrixXd(Eigen::MatrixXd::Ones(n, J_) - pos_mask_);
  const double p = config_.p;
  const double sigma = orientation();

  Inner r;
  r.s = s0;
  r.v = (v0.size() == d_.size()) ? Eigen::MatrixXd(v0.cwiseProduct(neg)) : Eigen::MatrixXd::Zero(n, J_);
  if (!(r.s > 0.0)) {
    const double Q = 0.5 * T_ * sigma * (d_.array() * w.array().square()).sum();
    const double I1 = 2.0 / (p + 1.0) * lp_modal(w);
    if (!(Q > 0.0) || !(I1 > 0.0)) throw DomainError("inner_maximize: direction has no positive part");
    r.s = std::pow(2.0 * Q / ((p + 1.0) * I1), 1.0 / (p - 1.0));
    r.v.setZero();
  }
  const Eigen::MatrixXd absd = d_.cwiseAbs();
  const double ps = T_ * (absd.array() * w.array().square()).sum();

  Eigen::MatrixXd U;
  for (r.iterations = 0;; ++r.iterations) {
    r.c = r.s * w + r.v;
    r.e = gradient_modal(r.c, &U);
    const double cn2 = r.c.squaredNorm();
    r.value = 0.5 * T_ * sigma * (d_.array() * r.c.array().square()).sum() -
              2.0 / (p + 1.0) * T_ * op_->weights().dot(abs_pow(U.array(), p + 1.0).rowwise().mean().matrix());
    const double gs = (r.e.array() * w.array()).sum();
    const Eigen::MatrixXd gv = r.e.cwiseProduct(neg);
    const double self = std::abs(gs) * r.s / (0.5 * T_ * cn2);
    const double minus = (2.0 / T_) * gv.norm() / std::sqrt(cn2);
    const double defect = std::max(self, minus);
    if (defect <= options_.inner_tol) {
      r.converged = true;
      break;
    }
    if (r.iterations >= options_.inner_max_iter) break;

    const Eigen::Index m = 1 + n * J_;
    Eigen::VectorXd g(m);
    g[0] = gs;
    g.tail(n * J_) = flatten(gv);
    const LinearMap A = [&](const Eigen::VectorXd& x) {
      const Eigen::MatrixXd dv = unflatten(x.tail(n * J_), n, J_).cwiseProduct(neg);
      const Eigen::MatrixXd dc = x[0] * w + dv;
      const Eigen::MatrixXd hd = T_ * (sigma * d_.cwiseProduct(dc) - derivative_modal(U, dc, false));
      Eigen::VectorXd out(m);
      out[0] = -(hd.array() * w.array()).sum();
      out.tail(n * J_) = -flatten(hd.cwiseProduct(neg));
      return out;
    };
    const LinearMap P = [&](const Eigen::VectorXd& x) {
      Eigen::VectorXd out(m);
      out[0] = x[0] / ps;
      out.tail(n * J_) = flatten(unflatten(x.tail(n * J_), n, J_).cwiseQuotient(T_ * absd).cwiseProduct(neg));
      return out;
    };
    Eigen::VectorXd step;
    const KrylovResult kr = pcg(A, P, g, step, std::clamp(defect, 1e-12, 1e-2), 400);
    double slope = g.dot(step);
    if (!(slope > 0.0)) {
      step = P(g);
      slope = g.dot(step);
    }
    double alpha = 1.0;
    while (r.s + alpha * step[0] <= 0.0) alpha *= 0.5;
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, alpha *= 0.5) {
      const double s_try = r.s + alpha * step[0];
      const Eigen::MatrixXd v_try = r.v + alpha * unflatten(step.tail(n * J_), n, J_).cwiseProduct(neg);
      const double val = oriented_value(s_try * w + v_try);
      const bool armijo = val >= r.value + 1e-4 * alpha * slope;
      const bool roundoff = kr.converged && alpha == 1.0 && std::abs(val - r.value) <= 1e-13 * std::abs(r.value);
      if (armijo || roundoff) {
        r.s = s_try;
        r.v = v_try;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
  }
  return r;
}

BreatherState BreatherProblem::make_state(const Eigen::MatrixXd& c, Method m) const {
  BreatherState st;
  st.field = from_modal(c);
  st.diagnostics = diagnose(st.field);
  st.method = m;
  st.sign = sign_;
  return st;
}

BreatherState BreatherProblem::inner_maximize(const TimeFourierField& w, bool freeze_negative) const {
  require_nonresonant();
  const Eigen::MatrixXd full = to_modal(w);
  Eigen::MatrixXd c = full.cwiseProduct(pos_mask_);
  const double hn = std::sqrt((d_.cwiseAbs().array() * c.array().square()).sum());
  const double hfull = std::sqrt((d_.cwiseAbs().array() * full.array().square()).sum());
  if (!(hn > 1e-12 * hfull)) throw DomainError("inner_maximize: P+ w = 0");
  c /= hn;
  const Inner r = maximize_modal(c, -1.0, Eigen::MatrixXd(), freeze_negative);
  BreatherState st = make_state(r.c, Method::inner);
  st.converged = r.converged;
  st.iterations = r.iterations;
  st.scale = r.s / hn;
  if (!r.converged) st.message = "inner maximization stopped before reaching the tolerance";
  else if (!(r.value > 0.0)) st.message = "inner maximum is not positive";
  return st;
}

BreatherState BreatherProblem::nehari_minimize(const TimeFourierField& start) const {
  require_nonresonant();
  const Eigen::MatrixXd absd = d_.cwiseAbs();
  auto hnorm = [&](const Eigen::MatrixXd& x) { return std::sqrt((absd.array() * x.array().square()).sum()); };
  auto hdot = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return (absd.array() * x.array() * y.array()).sum();
  };

  const Eigen::MatrixXd full = to_modal(start);
  Eigen::MatrixXd w = full.cwiseProduct(pos_mask_);
  const double w0 = hnorm(w);
  if (!(w0 > 1e-12 * hnorm(full))) throw DomainError("nehari_minimize: start has no component in H+");
  w /= w0;

  Inner cur = maximize_modal(w, -1.0, Eigen::MatrixXd(), false);
  if (!cur.converged) throw ConvergenceFailure("nehari_minimize: inner maximization failed at the start");

  auto reduced_gradient = [&](const Inner& in, const Eigen::MatrixXd& wv) {
    Eigen::MatrixXd g = in.s * in.e.cwiseProduct(pos_mask_).cwiseQuotient(absd);
    g -= hdot(g, wv) * wv;
    return g;
  };
  auto measure = [&](const Inner& in) {
    const double dual = std::sqrt((in.e.cwiseProduct(pos_mask_).array().square() / absd.array()).sum());
    return dual / (T_ * hnorm(in.c));
  };

  BreatherState out;
  Eigen::MatrixXd g = reduced_gradient(cur, w);
  Eigen::MatrixXd w_prev, g_prev;
  double tau = 0.0;
  int it = 0;
  bool converged = false;
  for (;; ++it) {
    const double r = measure(cur);
    const double gn = hnorm(g);
    out.history.push_back({it, cur.value, r, tau});
    if (r <= options_.outer_tol) {
      converged = true;
      break;
    }
    if (it >= options_.outer_max_iter) break;

    if (it == 0 || w_prev.size() == 0) {
      tau = 0.1 / gn;
    } else {
      const Eigen::MatrixXd sk = w - w_prev, yk = g - g_prev;
      const double sy = hdot(sk, yk);
      tau = sy > 0.0 ? hdot(sk, sk) / sy : 2.0 * tau;
    }
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, tau *= 0.5) {
      Eigen::MatrixXd w_try = w - tau * g;
      w_try /= hnorm(w_try);
      Inner trial = maximize_modal(w_try, cur.s, cur.v, false);
      if (!trial.converged) continue;
      const double decrease = cur.value - trial.value;
      const double predicted = tau * gn * gn;
      const bool armijo = decrease >= 1e-4 * predicted;
      // below the resolution of J the value test is meaningless; require a smaller gradient instead
      const bool flat = predicted <= 1e-12 * std::abs(cur.value) && measure(trial) < r;
      if (armijo || flat) {
        w_prev = w;
        g_prev = g;
        w = w_try;
        cur = std::move(trial);
        g = reduced_gradient(cur, w);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.message = "line search failed";
      break;
    }
    if (!(cur.value > 0.0)) {
      out.message = "reduced functional left the Nehari manifold (J <= 0)";
      break;
    }
  }

  BreatherState st = make_state(cur.c, Method::nehari);
  st.history = std::move(out.history);
  st.iterations = it;
  st.converged = converged;
  st.scale = cur.s;
  st.message = converged ? "converged" : (out.message.empty() ? "iteration cap reached" : out.message);
  return st;
}

BreatherState BreatherProblem::newton_solve(const TimeFourierField& start) const {
  require_nonresonant();
  if (options_.newton_continuation && J_ > 1) {
    SolverOptions sub = options_;
    sub.newton_continuation = false;
    TimeFourierField cur = start;
    BreatherState st;
    std::vector<IterationRecord> history;
    for (int Jc = 1; Jc <= J_; ++Jc) {
      FrequencyConfig cfg = config_;
      cfg.K = config_.kappa * (2 * Jc - 1);
      const BreatherProblem p(cfg, grid(), sign_, sub, op_);
      TimeFourierField s0 = TimeFourierField::zero(cfg, grid());
      const int keep = std::min(Jc, cur.harmonic_count());
      s0.coefficients.leftCols(keep) = cur.coefficients.leftCols(keep);
      st = p.newton_solve(s0);
      for (auto rec : st.history) history.push_back(rec);
      if (!st.converged) break;
      sub.newton_nehari_start = false;
      cur = st.field;
    }
    st.field.config = config_;
    if (st.field.harmonic_count() == J_) st.diagnostics = diagnose(st.field);
    st.history = std::move(history);
    return st;
  }

  Eigen::MatrixXd c = to_modal(start);
  if (options_.newton_nehari_start && c.cwiseProduct(pos_mask_).norm() > 0.0) {
    Eigen::MatrixXd w = c.cwiseProduct(pos_mask_);
    w /= std::sqrt((d_.cwiseAbs().array() * w.array().square()).sum());
    const Inner in = maximize_modal(w, -1.0, Eigen::MatrixXd(), false);
    if (in.converged) c = in.c;
  }
  const double sigma = orientation();
  const auto n = d_.rows();
  const double c0 = c.norm();
  BreatherState out;
  bool converged = false;
  int it = 0;
  Eigen::MatrixXd U;
  for (;; ++it) {
    const Eigen::MatrixXd F = sigma * d_.cwiseProduct(c) - nonlinearity_modal(c, &U);
    const double cn = c.norm();
    const double fn = F.norm();
    const double rel = cn > 0.0 ? fn / cn : 0.0;
    out.history.push_back({it, 0.0, rel, 0.0});
    if (cn <= 1e-12 * c0 || cn == 0.0) {
      out.message = "collapsed to the trivial solution u = 0";
      converged = true;
      break;
    }
    if (rel <= options_.newton_tol) {
      converged = true;
      break;
    }
    if (it >= options_.newton_max_iter) break;

    const LinearMap A = [&](const Eigen::VectorXd& x) {
      const Eigen::MatrixXd dc = unflatten(x, n, J_);
      return flatten(sigma * d_.cwiseProduct(dc) - derivative_modal(U, dc, true));
    };
    const LinearMap P = [&](const Eigen::VectorXd& x) {
      return flatten(unflatten(x, n, J_).cwiseQuotient(sigma * d_));
    };
    Eigen::VectorXd step = Eigen::VectorXd::Zero(n * J_);
    const double eta = std::clamp(0.1 * rel, 1e-13, 1e-4);
    const KrylovResult kr = gmres(A, P, -flatten(F), step, eta, 600, 80);
    if (!kr.converged && kr.relative_residual > 0.5)
      throw ConvergenceFailure("newton_solve: Jacobian singular or GMRES stagnated (relative residual " +
                               std::to_string(kr.relative_residual) + ")");
    const Eigen::MatrixXd dc = unflatten(step, n, J_);
    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 30; ++ls, alpha *= 0.5) {
      const Eigen::MatrixXd c_try = c + alpha * dc;
      const Eigen::MatrixXd F_try = sigma * d_.cwiseProduct(c_try) - nonlinearity_modal(c_try);
      if (F_try.norm() < (1.0 - 1e-4 * alpha) * fn) {
        c = c_try;
        accepted = true;
        break;
      }
    }
    out.history.back().step = alpha;
    if (!accepted) {
      out.message = "line search failed";
      break;
    }
  }
  BreatherState st = make_state(c, Method::newton);
  for (auto& rec : out.history) rec.value = st.diagnostics.oriented_J;
  st.history = std::move(out.history);
  st.iterations = it;
  st.converged = converged;
  st.message = converged ? (out.message.empty() ? "converged" : out.message)
                         : (out.message.empty() ? "iteration cap reached" : out.message);
  return st;
}

}  // namespace necklace
