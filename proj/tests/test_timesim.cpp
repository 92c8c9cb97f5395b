#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "necklace/errors.hpp"
#include "necklace/timesim.hpp"

using namespace necklace;
using std::numbers::pi;

namespace {

FrequencyConfig config(int J, double alpha = 0.0) { return FrequencyConfig::with_harmonics(1, 5, alpha, alpha, 3.0, J); }

NecklaceGrid periodic(int N, int M) { return NecklaceGrid(N, M, Boundary::periodic_cells); }

// eigenvector i of the spatial operator, unit W-norm
RealVector mode(const SpatialOperator& op, Eigen::Index i) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(op.size(), 1);
  c(i, 0) = 1.0;
  return op.from_modal(c).col(0);
}

}  // namespace

TEST_CASE("initial data from a breather field") {
  const NecklaceGrid g = periodic(2, 8);
  TimeFourierField f = TimeFourierField::zero(config(3), g);
  WaveState s = initial_data(f);
  CHECK(s.u.cwiseAbs().maxCoeff() == 0.0);
  CHECK(s.v.cwiseAbs().maxCoeff() == 0.0);

  std::mt19937 rng(1);
  std::normal_distribution<double> d;
  for (Eigen::Index i = 0; i < f.coefficients.rows(); ++i) f.coefficients(i, 0) = d(rng);
  s = initial_data(f);
  CHECK(s.u == f.coefficients.col(0));
  for (Eigen::Index i = 0; i < f.coefficients.size(); ++i) f.coefficients.data()[i] = d(rng);
  s = initial_data(f);
  CHECK(s.u == f.evaluate(0.0));
  CHECK(s.v.cwiseAbs().maxCoeff() == 0.0);
  CHECK(f.time_derivative(0.0).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear eigenmode oscillates at sqrt(mu + alpha)") {
  const double alpha = 0.3;
  TimesimOptions o;
  o.linear = true;
  const WaveIntegrator W(periodic(2, 12), alpha, 3.0, Nonlinearity::focusing, o);
  const auto& op = *W.spatial_operator();
  const Eigen::Index i = 17;
  const RealVector e = mode(op, i);
  const double freq = std::sqrt(op.eigenvalues()[i] + alpha);
  const double period = 2 * pi / freq;
  // phase-plane distance after one period; to leading order the phase error (freq dt)^2 / 24 * 2 pi
  auto error = [&](int steps) {
    WaveState s{W.grid(), 0.0, e, RealVector::Zero(e.size())};
    W.run(s, period / steps, steps);
    return std::hypot(W.l2_norm(s.u - e), W.l2_norm(s.v) / freq);
  };
  const double e1 = error(200), e2 = error(400), e3 = error(800);
  const double dt = period / 200;
  CHECK(e1 == doctest::Approx(2 * pi * freq * freq * dt * dt / 24).epsilon(0.05).scale(0));
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.02));
  CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("Verlet is time reversible") {
  std::mt19937 rng(2);
  std::normal_distribution<double> d;
  const WaveIntegrator W(periodic(3, 8), 0.1, 3.0, Nonlinearity::defocusing);
  WaveState s{W.grid(), 0.0, RealVector(W.spatial_operator()->size()), RealVector(W.spatial_operator()->size())};
  for (Eigen::Index i = 0; i < s.u.size(); ++i) {
    s.u[i] = 0.2 * d(rng);
    s.v[i] = 0.2 * d(rng);
  }
  const WaveState s0 = s;
  const double dt = 0.5 * W.max_stable_dt();
  W.run(s, dt, 200);
  s.v = -s.v;
  W.run(s, dt, 200);
  s.v = -s.v;
  CHECK((s.u - s0.u).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s.v - s0.v).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("step rejects unstable time steps") {
  const WaveIntegrator W(periodic(2, 8), 0.0, 3.0, Nonlinearity::focusing);
  // exact dispersion: largest eigenvalue (pi / h)^2 = M^2
  CHECK(W.max_stable_dt() == doctest::Approx(2.0 / 8.0).epsilon(1e-10));
  WaveState s = initial_data(TimeFourierField::zero(config(1), W.grid()));
  CHECK_THROWS_AS(W.step(s, 0.26), DomainError);
  CHECK_THROWS_AS(W.run(s, 0.26, 3), DomainError);
  CHECK_THROWS_AS(W.step(s, -0.01), DomainError);
  CHECK_NOTHROW(W.step(s, 0.2));
}

TEST_CASE("energy") {
  std::mt19937 rng(3);
  std::normal_distribution<double> d;
  TimesimOptions o;
  o.dispersion = Dispersion::second_order;
  o.linear = true;
  const double alpha = 0.4;
  const WaveIntegrator W(periodic(2, 8), alpha, 3.0, Nonlinearity::focusing, o);
  const auto n = W.spatial_operator()->size();
  WaveState s{W.grid(), 0.0, RealVector::Zero(n), RealVector::Zero(n)};
  CHECK(W.energy(s) == 0.0);

  // static linear profile: E = (1/2) u^T (L_k + omega^2 k^2 W) u
  for (Eigen::Index i = 0; i < n; ++i) s.u[i] = d(rng);
  SolverOptions so;
  so.dispersion = Dispersion::second_order;
  const FrequencyConfig c = FrequencyConfig::with_harmonics(1, 5, alpha, alpha, 3.0, 1);
  const BreatherProblem P(c, W.grid(), Nonlinearity::focusing, so);
  const SparseMatrix L = P.assemble_Lk(5);
  const RealVector& w = W.spatial_operator()->weights();
  const double form = 0.5 * (s.u.dot(L * s.u) + 6.25 * s.u.dot(w.asDiagonal() * s.u));
  CHECK(W.energy(s) == doctest::Approx(form).epsilon(1e-13));
}

TEST_CASE("energy error is O(dt^2) without secular drift") {
  std::mt19937 rng(4);
  std::normal_distribution<double> d;
  const WaveIntegrator W(periodic(3, 8), 0.2, 3.0, Nonlinearity::defocusing);
  const auto n = W.spatial_operator()->size();
  WaveState s0{W.grid(), 0.0, RealVector(n), RealVector::Zero(n)};
  for (Eigen::Index i = 0; i < n; ++i) s0.u[i] = 0.3 * d(rng);
  auto deviation = [&](double dt, int steps, double* late = nullptr) {
    WaveState s = s0;
    const double e0 = W.energy(s);
    double worst = 0.0, worst_late = 0.0;
    int k = 0;
    W.run(s, dt, steps, [&](const WaveState& st) {
      const double e = std::abs(W.energy(st) - e0) / e0;
      worst = std::max(worst, e);
      if (2 * k++ > steps) worst_late = std::max(worst_late, e);
    });
    if (late) *late = worst_late;
    return worst;
  };
  const double dt = 0.02;
  const double a = deviation(dt, 1000), b = deviation(dt / 2, 2000);
  CHECK(a / b == doctest::Approx(4.0).epsilon(0.1));
  // bounded oscillation: the second half of a long run is no worse than the first
  double late = 0.0;
  const double all = deviation(dt, 10000, &late);
  CHECK(all < 1e-2);
  CHECK(late <= 1.5 * deviation(dt, 5000));
}

TEST_CASE("breather return and antiperiod") {
  SolverOptions o;
  o.outer_tol = 1e-11;
  const BreatherProblem P(config(2), periodic(6, 12), Nonlinearity::focusing, o);
  const BreatherState b = P.newton_solve(P.seed());
  REQUIRE(b.converged);
  const WaveIntegrator W(P);
  const double h = pi / 12;
  std::vector<Observation> obs;
  const ReturnReport r1 = return_error(b, h / 2, W, &obs);
  const ReturnReport r2 = return_error(b, h / 4, W);
  CHECK(r1.period == doctest::Approx(2 * pi / 2.5));
  CHECK(r1.steps % 2 == 0);
  CHECK(r1.dt <= h / 2);
  CHECK(r1.return_error / r2.return_error > 3.5);
  CHECK(r2.antiperiod_error < r1.antiperiod_error);
  CHECK(r1.energy_drift / r2.energy_drift > 3.5);
  CHECK(r1.tail_growth < 10.0);
  CHECK(r1.flux_residual < 3.0 * r1.initial_flux_residual);
  REQUIRE(obs.size() == static_cast<std::size_t>(r1.steps + 1));
  CHECK(obs.front().t == 0.0);
  CHECK(obs.front().return_gap == 0.0);
  CHECK(obs.back().t == doctest::Approx(r1.period));
  CHECK(obs.back().return_gap == doctest::Approx(r1.return_error).epsilon(1e-6).scale(0));

  // two periods: same step, errors grow but stay small
  const ReturnReport two = simulate(b, h / 4, 2, W);
  CHECK(two.steps == 2 * r2.steps);
  CHECK(two.return_error < 10 * r2.return_error);
}

TEST_CASE("zero data and run-length checks") {
  const BreatherProblem P(config(1), periodic(1, 8), Nonlinearity::focusing);
  const WaveIntegrator W(P);
  BreatherState zero;
  zero.field = TimeFourierField::zero(P.config(), P.grid());
  CHECK_THROWS_AS(return_error(zero, 0.05, W), DomainError);
  std::vector<Observation> obs;
  const ReturnReport r = simulate(zero, 0.05, 1, W, &obs);
  CHECK(r.return_error == 0.0);
  for (const auto& o : obs) {
    CHECK(o.energy == 0.0);
    CHECK(o.l2_norm == 0.0);
    CHECK(o.return_gap == 0.0);
  }
  CHECK_THROWS_AS(check_reflection_free(periodic(1, 8), 20.0), DomainError);
  CHECK_NOTHROW(check_reflection_free(periodic(2, 8), 20.0));
  CHECK_THROWS_AS(simulate(zero, 0.05, 20, W), DomainError);

  std::stringstream ss;
  write_observables_csv(ss, obs);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "t,energy,l2_norm,tail_mass,return_gap");
}
