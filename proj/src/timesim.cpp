#include "necklace/timesim.hpp"

#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "necklace/errors.hpp"

namespace necklace {

WaveState initial_data(const TimeFourierField& field) {
  WaveState s;
  s.grid = field.grid;
  s.u = field.coefficients.rowwise().sum();
  s.v = RealVector::Zero(s.u.size());
  return s;
}

WaveState initial_data(const BreatherState& b) { return initial_data(b.field); }

WaveIntegrator::WaveIntegrator(const NecklaceGrid& grid, double alpha, double p, Nonlinearity sign,
                               TimesimOptions options, SpatialOperatorPtr op)
    : op_(std::move(op)), alpha_(alpha), p_(p) {
  if (!op_) op_ = std::make_shared<SpatialOperator>(grid, options.dispersion);
  else if (!(op_->grid() == grid)) throw GridMismatch("integrator: operator grid differs");
  if (!(p > 1.0)) throw DomainError("integrator: p must exceed 1");
  coupling_ = options.linear ? 0.0 : (sign == Nonlinearity::focusing ? 1.0 : -1.0);
}

WaveIntegrator::WaveIntegrator(const BreatherProblem& problem, bool linear)
    : op_(problem.spatial_operator()), alpha_(problem.config().alpha), p_(problem.config().p) {
  coupling_ = linear ? 0.0 : problem.orientation();
}

double WaveIntegrator::max_stable_dt() const { return 2.0 / std::sqrt(op_->max_eigenvalue() + alpha_); }

RealVector WaveIntegrator::acceleration(const RealVector& u) const {
  RealVector a = -op_->apply(u) - alpha_ * u;
  if (coupling_ != 0.0) {
    Eigen::ArrayXd g;
    if (p_ == 3.0) g = u.array().square();
    else g = u.array().abs().pow(p_ - 1.0);
    a.array() += coupling_ * g * u.array();
  }
  return a;
}

double WaveIntegrator::energy(const WaveState& s) const {
  const RealVector& w = op_->weights();
  double e = 0.5 * s.v.dot(w.asDiagonal() * s.v) + 0.5 * op_->dirichlet_form(s.u) +
             0.5 * alpha_ * s.u.dot(w.asDiagonal() * s.u);
  if (coupling_ != 0.0) e -= coupling_ * w.dot(s.u.array().abs().pow(p_ + 1.0).matrix()) / (p_ + 1.0);
  return e;
}

double WaveIntegrator::l2_norm(const RealVector& u) const {
  return std::sqrt(u.dot(op_->weights().asDiagonal() * u));
}

double WaveIntegrator::tail_mass(const RealVector& u) const {
  const NecklaceGrid& g = grid();
  const RealVector& w = op_->weights();
  const auto S = static_cast<Eigen::Index>(g.cell_stride(true));
  const Eigen::Index offset = g.boundary() == Boundary::dirichlet_truncation ? 1 : 0;
  const int n0 = g.half_width() / 2;
  double tail = 0.0, total = 0.0;
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const double m = w[i] * u[i] * u[i];
    total += m;
    const int n = g.first_cell() + static_cast<int>((i + offset) / S);
    if (std::abs(n) > n0) tail += m;
  }
  return total > 0.0 ? tail / total : 0.0;
}

void WaveIntegrator::step(WaveState& s, double dt) const {
  if (!(dt > 0.0) || dt > max_stable_dt()) {
    std::ostringstream msg;
    msg << "time step " << dt << " violates the stability limit " << max_stable_dt();
    throw DomainError(msg.str());
  }
  s.v += 0.5 * dt * acceleration(s.u);
  s.u += dt * s.v;
  s.v += 0.5 * dt * acceleration(s.u);
  s.t += dt;
}

void WaveIntegrator::run(WaveState& s, double dt, int steps,
                         const std::function<void(const WaveState&)>& observer) const {
  if (observer) observer(s);
  if (steps == 0) return;
  if (!(dt > 0.0) || dt > max_stable_dt()) step(s, dt);  // throws
  // kick-drift-kick with merged half kicks
  RealVector a = acceleration(s.u);
  for (int i = 0; i < steps; ++i) {
    s.v += 0.5 * dt * a;
    s.u += dt * s.v;
    a = acceleration(s.u);
    s.v += 0.5 * dt * a;
    s.t += dt;
    if (observer) observer(s);
  }
}

void check_reflection_free(const NecklaceGrid& grid, double run_time) {
  const double needed = run_time / (2.0 * 2.0 * std::numbers::pi);
  if (grid.half_width() < needed) {
    std::ostringstream msg;
    msg << "run time " << run_time << " lets waves return from the truncation; need N >= " << std::ceil(needed);
    throw DomainError(msg.str());
  }
}

ReturnReport simulate(const BreatherState& b, double dt, int periods, const WaveIntegrator& integrator,
                      std::vector<Observation>* observations) {
  const TimeFourierField& f = b.field;
  if (!(f.grid == integrator.grid())) throw GridMismatch("simulate: breather grid differs from the integrator");
  if (periods < 1) throw DomainError("simulate: periods must be positive");
  if (!(dt > 0.0)) throw DomainError("simulate: dt must be positive");
  ReturnReport r;
  r.period = f.period();
  check_reflection_free(f.grid, periods * r.period);
  const int half = static_cast<int>(std::ceil(0.5 * r.period / dt));
  const int per_period = 2 * std::max(half, 1);
  r.steps = per_period * periods;
  r.dt = r.period / per_period;

  WaveState s = initial_data(f);
  const RealVector u0 = s.u;
  const double n0 = integrator.l2_norm(u0);
  const double scale = n0 > 0.0 ? n0 : 1.0;
  const double e0 = integrator.energy(s);
  const double escale = e0 != 0.0 ? std::abs(e0) : 1.0;
  const double tail0 = integrator.tail_mass(u0);
  RealVector u_half;
  int index = 0;
  integrator.run(s, r.dt, r.steps, [&](const WaveState& st) {
    const double e = integrator.energy(st);
    r.energy_oscillation = std::max(r.energy_oscillation, std::abs(e - e0) / escale);
    const double tail = integrator.tail_mass(st.u);
    if (tail0 > 0.0) r.tail_growth = std::max(r.tail_growth, tail / tail0);
    if (index == r.steps - per_period / 2) u_half = st.u;
    if (observations) {
      Observation o;
      o.t = st.t;
      o.energy = e;
      o.l2_norm = integrator.l2_norm(st.u);
      o.tail_mass = tail;
      o.return_gap = integrator.l2_norm(st.u - f.evaluate(st.t)) / scale;
      observations->push_back(o);
    }
    ++index;
  });
  r.return_error = integrator.l2_norm(s.u - u0) / scale;
  r.antiperiod_error = integrator.l2_norm(u_half + u0) / scale;
  r.energy_drift = std::abs(integrator.energy(s) - e0) / escale;
  for (const auto& v : kirchhoff_flux_residual(GraphFunction::from_real(s.grid, true, s.u)))
    r.flux_residual = std::max(r.flux_residual, v.residual);
  for (const auto& v : kirchhoff_flux_residual(GraphFunction::from_real(s.grid, true, u0)))
    r.initial_flux_residual = std::max(r.initial_flux_residual, v.residual);
  return r;
}

ReturnReport return_error(const BreatherState& b, double dt, const WaveIntegrator& integrator,
                          std::vector<Observation>* observations) {
  if (!(b.field.max_abs() > 0.0)) throw DomainError("return_error: zero initial state");
  return simulate(b, dt, 1, integrator, observations);
}

ReturnReport return_error(const BreatherState& b, double dt) {
  const FrequencyConfig& c = b.field.config;
  const WaveIntegrator integrator(b.field.grid, c.alpha, c.p, b.sign);
  return return_error(b, dt, integrator);
}

void write_observables_csv(std::ostream& os, const std::vector<Observation>& obs) {
  os << "t,energy,l2_norm,tail_mass,return_gap\n";
  os.precision(17);
  for (const auto& o : obs)
    os << o.t << ',' << o.energy << ',' << o.l2_norm << ',' << o.tail_mass << ',' << o.return_gap << '\n';
}

}  // namespace necklace
