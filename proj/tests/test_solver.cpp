#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "necklace/errors.hpp"
#include "necklace/solver.hpp"

using namespace necklace;
using std::numbers::pi;

namespace {

FrequencyConfig config(int J, double p = 3.0, double alpha = 0.0) {
  return FrequencyConfig::with_harmonics(1, 5, alpha, alpha, p, J);
}

NecklaceGrid periodic(int N, int M) { return NecklaceGrid(N, M, Boundary::periodic_cells); }

TimeFourierField random_field(const BreatherProblem& P, std::mt19937& rng, double scale = 1.0) {
  std::normal_distribution<double> d;
  TimeFourierField u = TimeFourierField::zero(P.config(), P.grid());
  for (Eigen::Index i = 0; i < u.coefficients.size(); ++i) u.coefficients.data()[i] = scale * d(rng);
  return u;
}

double rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

// W-weighted norm of all harmonics
double wnorm(const BreatherProblem& P, const TimeFourierField& u) {
  const RealVector& w = P.spatial_operator()->weights();
  return std::sqrt(u.coefficients.cwiseProduct(w.asDiagonal() * u.coefficients).sum());
}

}  // namespace

TEST_CASE("L_k on constants and on the l = 0 cosine mode") {
  const auto c = config(2);
  for (Dispersion disp : {Dispersion::second_order, Dispersion::exact}) {
    SolverOptions o;
    o.dispersion = disp;
    const BreatherProblem P(c, periodic(2, 8), Nonlinearity::focusing, o);
    const RealVector one = RealVector::Ones(P.spatial_operator()->size());
    CHECK((P.apply_Lk(5, one) - (0.0 - 6.25) * one).cwiseAbs().maxCoeff() < 1e-10);
  }

  auto defect = [&](int M, Dispersion disp) {
    SolverOptions o;
    o.dispersion = disp;
    const BreatherProblem P(c, periodic(2, M), Nonlinearity::focusing, o);
    const int m = 2;
    const RealVector u =
        GraphFunction::sample(P.grid(), true, [&](int, Edge, double x) { return std::cos(m * x); }).real();
    const RealVector r = P.apply_Lk(5, u) - (m * m - 6.25) * u;
    return r.cwiseAbs().maxCoeff();
  };
  const double e1 = defect(16, Dispersion::second_order), e2 = defect(32, Dispersion::second_order);
  // leading error of the second difference on cos(m x): m^4 h^2 / 12
  CHECK(e1 == doctest::Approx(std::pow(2.0, 4) * (pi / 16) * (pi / 16) / 12).epsilon(0.05).scale(0));
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
  // sampled continuum eigenfunctions are exact eigenvectors with the exact dispersion
  CHECK(defect(16, Dispersion::exact) < 1e-10);
}

TEST_CASE("assembled L_k is symmetric") {
  const BreatherProblem P(config(2), periodic(3, 8), Nonlinearity::focusing);
  for (int k : {5, 15}) {
    const SparseMatrix A = P.assemble_Lk(k);
    const SparseMatrix At = A.transpose();
    CHECK((A - At).norm() <= 1e-15 * A.norm());
  }
}

TEST_CASE("Dirichlet truncation at a vertex resonates at the gap centre") {
  // u = 0 at a vertex propagates to u = 0 at every vertex when sqrt(lambda) is a
  // half-integer, so lambda = k^2 / 4 is an exact eigenvalue of the truncated problem.
  const BreatherProblem P(config(2), NecklaceGrid(3, 8), Nonlinearity::focusing);
  CHECK(P.min_abs_eigenvalue() < 1e-10);
  CHECK_THROWS_AS(P.require_nonresonant(), DiscreteResonance);
  CHECK_THROWS_AS(P.linear_resolve(TimeFourierField::zero(P.config(), P.grid())), DiscreteResonance);
  const BreatherProblem Q(config(2), periodic(3, 8), Nonlinearity::focusing);
  CHECK_NOTHROW(Q.require_nonresonant());
}

TEST_CASE("linear_resolve") {
  std::mt19937 rng(21);
  const BreatherProblem P(config(3), periodic(3, 10), Nonlinearity::focusing);
  const auto n = P.spatial_operator()->size();

  SUBCASE("eigenvector") {
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, 3);
    c(7, 1) = 1.0;
    const TimeFourierField e = P.from_modal(c);
    const double mu = P.shifted_eigenvalues()(7, 1);
    const TimeFourierField v = P.linear_resolve(e);
    CHECK(rel_diff(v.coefficients, e.coefficients / mu) < 1e-12);
  }
  SUBCASE("round trip and bound") {
    for (int t = 0; t < 5; ++t) {
      const TimeFourierField f = random_field(P, rng);
      const TimeFourierField back = P.linear_resolve(P.apply_L(f));
      CHECK(rel_diff(back.coefficients, f.coefficients) < 1e-10);
      const TimeFourierField v = P.linear_resolve(f);
      CHECK(wnorm(P, v) <= wnorm(P, f) / P.min_abs_eigenvalue() * (1 + 1e-12));
    }
  }
}

TEST_CASE("nonlinear term") {
  const BreatherProblem P(config(2), periodic(2, 8), Nonlinearity::focusing);
  const BreatherProblem D(config(2), periodic(2, 8), Nonlinearity::defocusing);
  TimeFourierField u = TimeFourierField::zero(P.config(), P.grid());
  CHECK(P.nonlinear_term(u).coefficients.cwiseAbs().maxCoeff() == 0.0);

  // cos^3 = (3 cos + cos 3.) / 4 and harmonics 5, 15 are (j, 3j)
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> d(-2.0, 2.0);
  for (Eigen::Index i = 0; i < u.coefficients.rows(); ++i) u.coefficients(i, 0) = d(rng);
  const TimeFourierField N = P.nonlinear_term(u);
  const Eigen::ArrayXd a = u.coefficients.col(0).array();
  CHECK((N.coefficients.col(0).array() - 0.75 * a.cube()).abs().maxCoeff() < 1e-13);
  CHECK((N.coefficients.col(1).array() - 0.25 * a.cube()).abs().maxCoeff() < 1e-13);
  CHECK(rel_diff(D.nonlinear_term(u).coefficients, -N.coefficients) == 0.0);

  const TimeFourierField v = random_field(P, rng);
  TimeFourierField mv = v;
  mv.coefficients = -v.coefficients;
  CHECK((P.nonlinear_term(mv).coefficients + P.nonlinear_term(v).coefficients).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("functional values and homogeneity") {
  std::mt19937 rng(5);
  for (double p : {3.0, 2.5, 1.5}) {
    const BreatherProblem P(config(2, p), periodic(2, 8), Nonlinearity::focusing);
    CHECK(P.evaluate_J(TimeFourierField::zero(P.config(), P.grid())) == 0.0);
    const TimeFourierField u = random_field(P, rng);
    TimeFourierField su = u;
    su.coefficients *= 1.7;
    CHECK(P.lp_integral(su) == doctest::Approx(std::pow(1.7, p + 1.0) * P.lp_integral(u)).epsilon(1e-12));
  }
}

TEST_CASE("gradient matches central differences") {
  std::mt19937 rng(6);
  for (auto sign : {Nonlinearity::focusing, Nonlinearity::defocusing}) {
    const BreatherProblem P(config(3), periodic(8, 16), sign);
    double worst = 0.0;
    for (int t = 0; t < 6; ++t) {
      const TimeFourierField u = random_field(P, rng, 0.5), v = random_field(P, rng);
      const double eps = std::cbrt(std::numeric_limits<double>::epsilon()) * wnorm(P, u) / wnorm(P, v);
      TimeFourierField up = u, um = u;
      up.coefficients += eps * v.coefficients;
      um.coefficients -= eps * v.coefficients;
      const double fd = (P.evaluate_J(up) - P.evaluate_J(um)) / (2 * eps);
      const double an = P.st_inner(P.evaluate_dJ(u), v);
      worst = std::max(worst, std::abs(fd - an) / std::abs(an));
    }
    CHECK(worst <= 1e-5);
  }
}

TEST_CASE("spectral projectors") {
  std::mt19937 rng(7);
  const BreatherProblem P(config(2), periodic(3, 10), Nonlinearity::focusing);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    const TimeFourierField u = random_field(P, rng);
    const TimeFourierField up = P.project(u, ModeSign::plus), um = P.project(u, ModeSign::minus);
    const double s = u.coefficients.norm();
    worst = std::max(worst, (up.coefficients + um.coefficients - u.coefficients).norm() / s);
    worst = std::max(worst, (P.project(up, ModeSign::plus).coefficients - up.coefficients).norm() / s);
    worst = std::max(worst, (P.project(um, ModeSign::minus).coefficients - um.coefficients).norm() / s);
    worst = std::max(worst, P.project(up, ModeSign::minus).coefficients.norm() / s);
    for (int j = 1; j <= 2; ++j) {
      const int k = u.harmonic(j);
      const RealVector& a = up.coefficients.col(j - 1);
      const RealVector& b = um.coefficients.col(j - 1);
      const RealVector& w = P.spatial_operator()->weights();
      CHECK(a.dot(w.asDiagonal() * P.apply_Lk(k, a)) >= 0.0);
      CHECK(b.dot(w.asDiagonal() * P.apply_Lk(k, b)) <= 0.0);
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("negative-mode count agrees with the band picture") {
  // harmonic k = kappa: bands |m| <= (kappa - 1)/2 lie below omega^2 kappa^2, one mode per lattice point
  const BreatherProblem P(config(1), periodic(4, 12), Nonlinearity::focusing);
  CHECK(P.negative_mode_count() == 9 * 5);
  CHECK(P.expected_negative_modes() == 9 * 5);
  const BreatherProblem Q(config(3), periodic(4, 12), Nonlinearity::focusing);
  CHECK(Q.negative_mode_count() == 9 * (5 + 15 + 24));  // k = 25 saturates at 2M
  CHECK(Q.expected_negative_modes() == Q.negative_mode_count());
}

TEST_CASE("inner maximization") {
  std::mt19937 rng(8);
  const BreatherProblem P(config(2), periodic(3, 10), Nonlinearity::focusing);
  const TimeFourierField seed = P.seed();

  SUBCASE("scalar oracle with the negative space frozen") {
    const TimeFourierField wp = P.project(seed, ModeSign::plus);
    const BreatherState st = P.inner_maximize(seed, true);
    REQUIRE(st.converged);
    // golden-section maximization of s -> J[s w+]
    auto f = [&](double s) {
      TimeFourierField x = wp;
      x.coefficients *= s;
      return P.evaluate_J(x);
    };
    double a = 0.0, b = 10.0;
    const double g = (std::sqrt(5.0) - 1) / 2;
    for (int i = 0; i < 200; ++i) {
      const double x1 = b - g * (b - a), x2 = a + g * (b - a);
      (f(x1) < f(x2) ? a : b) = (f(x1) < f(x2) ? x1 : x2);
    }
    const double s_star = 0.5 * (a + b);
    CHECK(rel_diff(st.field.coefficients, s_star * wp.coefficients) < 1e-6);
    // closed form s^{p-1} = J0 / int |w|^{p+1}
    const double I = P.lp_integral(wp);
    const double J0 = P.evaluate_J(wp) + 0.5 * I;
    CHECK(st.scale == doctest::Approx(std::sqrt(J0 / I)).epsilon(1e-10));
  }
  SUBCASE("cone invariance and Nehari conditions") {
    const BreatherState a = P.inner_maximize(seed);
    REQUIRE(a.converged);
    CHECK(a.diagnostics.oriented_J > 0.0);
    CHECK(a.diagnostics.nehari_self <= 1e-10);
    CHECK(a.diagnostics.nehari_minus <= 1e-10);
    TimeFourierField scaled = seed;
    scaled.coefficients *= 3.7;
    CHECK(rel_diff(P.inner_maximize(scaled).field.coefficients, a.field.coefficients) < 1e-10);
    // adding a negative-space component leaves the half-space unchanged
    TimeFourierField shifted = seed;
    shifted.coefficients += P.project(random_field(P, rng), ModeSign::minus).coefficients;
    CHECK(rel_diff(P.inner_maximize(shifted).field.coefficients, a.field.coefficients) < 1e-8);
  }
  SUBCASE("no positive part") {
    const TimeFourierField minus = P.project(random_field(P, rng), ModeSign::minus);
    CHECK_THROWS_AS(P.inner_maximize(minus), DomainError);
  }
}

TEST_CASE("ground states for both signs") {
  SolverOptions o;
  o.outer_tol = 1e-11;
  for (auto sign : {Nonlinearity::focusing, Nonlinearity::defocusing}) {
    CAPTURE(to_string(sign));
    const BreatherProblem P(config(2), periodic(6, 12), sign, o);
    const TimeFourierField seed = P.seed();
    const BreatherState a = P.nehari_minimize(seed);
    REQUIRE(a.converged);
    const auto& d = a.diagnostics;
    CHECK(d.pde_residual <= 1e-8);
    CHECK(d.nehari_self <= 1e-8);
    CHECK(d.nehari_minus <= 1e-8);
    CHECK(d.ground_state_defect <= 1e-6);
    CHECK(d.oriented_J > 0.0);
    CHECK(d.oriented_J <= P.inner_maximize(seed).diagnostics.oriented_J);
    for (std::size_t n = 1; n < d.tail_mass.size(); ++n) CHECK(d.tail_mass[n] <= d.tail_mass[n - 1]);
    CHECK(d.tail_mass.back() < 1e-3);

    const BreatherState b = P.newton_solve(seed);
    REQUIRE(b.converged);
    CHECK(b.diagnostics.pde_residual <= 1e-10);
    CHECK(rel_diff(b.field.coefficients, a.field.coefficients) < 1e-6);

    // antiperiodicity of the reconstruction
    const double Th = a.field.antiperiod();
    double worst = 0.0;
    for (int q = 0; q < 16; ++q) {
      const double t = 0.37 * q;
      worst = std::max(worst, (a.field.evaluate(t + Th) + a.field.evaluate(t)).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-12 * a.field.max_abs());
  }
}

TEST_CASE("Newton convergence log") {
  const BreatherProblem P(config(2), periodic(5, 12), Nonlinearity::focusing);
  const BreatherState st = P.newton_solve(P.seed());
  REQUIRE(st.converged);
  const auto& h = st.history;
  REQUIRE(h.size() >= 3);
  CHECK(h.back().residual <= 1e-10);
  // once in the quadratic regime r_{n+1} <= C r_n^2 with a moderate constant
  for (std::size_t i = 0; i + 1 < h.size(); ++i)
    if (h[i].residual < 1e-3 && h[i].step == 1.0) CHECK(h[i + 1].residual <= 100.0 * h[i].residual * h[i].residual);

  // continuation over the harmonic count reaches the same state
  SolverOptions o;
  o.newton_continuation = true;
  const BreatherProblem Q(config(2), periodic(5, 12), Nonlinearity::focusing, o);
  const BreatherState c = Q.newton_solve(Q.seed());
  REQUIRE(c.converged);
  CHECK(rel_diff(c.field.coefficients, st.field.coefficients) < 1e-8);
}

TEST_CASE("Newton from a tiny start collapses to zero") {
  std::mt19937 rng(11);
  SolverOptions o;
  o.newton_nehari_start = false;
  const BreatherProblem P(config(2), periodic(3, 8), Nonlinearity::focusing, o);
  const TimeFourierField u = random_field(P, rng, 1e-8);
  const BreatherState st = P.newton_solve(u);
  CHECK(st.converged);
  CHECK(st.field.max_abs() < 1e-15);
}

TEST_CASE("harmonic norms") {
  std::mt19937 rng(12);
  const BreatherProblem P(config(3), periodic(3, 10), Nonlinearity::focusing);
  const auto n = P.spatial_operator()->size();
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n, 3);
  c(11, 2) = 1.0;
  const TimeFourierField e = P.from_modal(c);
  // a cos(k t) has Fourier coefficients a/2 at +-k
  const double quarter = 0.25 * wnorm(P, e) * wnorm(P, e);
  CHECK(P.norms(e).calH * P.norms(e).calH ==
        doctest::Approx(std::abs(P.shifted_eigenvalues()(11, 2)) * 2 * quarter).epsilon(1e-12));

  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto h = P.norms(random_field(P, rng));
    lo = std::min(lo, h.ratio);
    hi = std::max(hi, h.ratio);
  }
  CHECK(hi < 10.0);
  CHECK(lo > 0.0);
  const auto z = P.norms(TimeFourierField::zero(P.config(), P.grid()));
  CHECK(z.calH == 0.0);
  CHECK(z.H == 0.0);
  CHECK(P.norms(random_field(P, rng, 1e-100)).calH > 0.0);
}

TEST_CASE("seed is a single harmonic in the positive space") {
  const BreatherProblem P(config(2), periodic(4, 12), Nonlinearity::focusing);
  const TimeFourierField s = P.seed();
  CHECK(s.max_abs() == doctest::Approx(1.0));
  CHECK(s.coefficients.col(1).norm() == 0.0);
  CHECK(P.project(s, ModeSign::minus).coefficients.norm() <= 1e-12 * s.coefficients.norm());
}

TEST_CASE("mismatched layouts are rejected") {
  const BreatherProblem P(config(2), periodic(2, 8), Nonlinearity::focusing);
  const auto other = TimeFourierField::zero(config(3), periodic(2, 8));
  CHECK_THROWS_AS(P.evaluate_J(other), GridMismatch);
  CHECK_THROWS_AS(P.nonlinear_term(TimeFourierField::zero(config(2), periodic(3, 8))), GridMismatch);
  SolverOptions o;
  o.time_samples = 4;
  CHECK_THROWS_AS(BreatherProblem(config(2), periodic(2, 8), Nonlinearity::focusing, o), DomainError);
}
