#include "necklace/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include <boost/math/quadrature/gauss.hpp>

#include "necklace/errors.hpp"

namespace necklace {

namespace {

constexpr double pi = std::numbers::pi;
using cplx = std::complex<double>;

// sin(pi s) / s with the removable singularity at s = 0.
double sinc_pi(double s) {
  if (std::abs(s) < 1e-4) {
    const double x2 = pi * pi * s * s;
    return pi * (1.0 - x2 / 6.0 + x2 * x2 / 120.0);
  }
  return std::sin(pi * s) / s;
}

double cos_target(double l) { return (8.0 * std::cos(2.0 * pi * l) + 1.0) / 9.0; }

void check_lambda(double lambda) {
  if (!(lambda >= 0.0)) throw DomainError("lambda must be non-negative");
}

// Derivative of tr M with respect to s = sqrt(lambda), from the product rule on
// the edge transfer matrices.
double trace_derivative(double s) {
  const double c = std::cos(pi * s);
  const double sn = std::sin(pi * s);
  Eigen::Matrix2d T;
  T << c, sinc_pi(s), -s * sn, c;
  Eigen::Matrix2d dT;
  const double dsinc = std::abs(s) < 1e-4 ? -pi * pi * pi * s / 3.0 : (pi * c * s - sn) / (s * s);
  dT << -pi * sn, dsinc, -sn - pi * s * c, -pi * sn;
  const Eigen::DiagonalMatrix<double, 2> D2(1.0, 2.0), Dh(1.0, 0.5);
  const Eigen::Matrix2d d = D2 * dT * Dh * T + D2 * T * Dh * dT;
  return d.trace();
}

}  // namespace

double a_of_l(double l) {
  const double c = std::clamp(cos_target(l), -1.0, 1.0);
  return std::acos(c) / (2.0 * pi);
}

double a_half() { return std::acos(-7.0 / 9.0) / (2.0 * pi); }

double hill_discriminant(double lambda) {
  check_lambda(lambda);
  return (9.0 * std::cos(2.0 * pi * std::sqrt(lambda)) - 1.0) / 4.0;
}

Eigen::Matrix2d edge_transfer(double lambda) {
  check_lambda(lambda);
  const double s = std::sqrt(lambda);
  Eigen::Matrix2d T;
  T << std::cos(pi * s), sinc_pi(s), -s * std::sin(pi * s), std::cos(pi * s);
  return T;
}

Eigen::Matrix2d monodromy_matrix(double lambda) {
  const Eigen::Matrix2d T = edge_transfer(lambda);
  const Eigen::DiagonalMatrix<double, 2> D2(1.0, 2.0), Dh(1.0, 0.5);
  return D2 * T * Dh * T;
}

BandPoint band_closed_form(int m, double l) {
  BandPoint b;
  b.m = m;
  b.l = l;
  b.a_of_l = a_of_l(l);
  const double r = m + b.a_of_l;
  b.lambda = r * r;
  return b;
}

double band_at_half(int m) {
  const double c = std::acos(-7.0 / 9.0);
  return m * m + c / pi * m + c * c / (4.0 * pi * pi);
}

BandPoint band_from_monodromy(int m, double l) {
  const double target = 2.0 * std::cos(2.0 * pi * l);
  auto F = [&](double s) { return monodromy_matrix(s * s).trace() - target; };

  // Branch bracket in s = sqrt(lambda): [m, m + 1/2] for m >= 0, [|m| - 1/2, |m|] below.
  double lo, hi;
  if (m >= 0) {
    lo = m;
    hi = m + 0.5;
  } else {
    lo = -m - 0.5;
    hi = -m;
  }
  double flo = F(lo), fhi = F(hi);
  double s;
  constexpr double touch = 1e-14;  // tr M touches 2 cos(2 pi l) at the integer end when l = 0
  if (std::abs(flo) <= touch && m >= 0) {
    s = lo;
  } else if (std::abs(fhi) <= touch && m < 0) {
    s = hi;
  } else {
    if (flo * fhi > 0.0)
      throw BracketFailure("band_from_monodromy: no sign change for m=" + std::to_string(m) +
                           ", l=" + std::to_string(l));
    for (int it = 0; it < 200 && hi - lo > 4e-16 * std::max(1.0, hi); ++it) {
      const double mid = 0.5 * (lo + hi);
      const double fm = F(mid);
      if (fm == 0.0) {
        lo = hi = mid;
        break;
      }
      if ((fm > 0.0) == (flo > 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    s = 0.5 * (lo + hi);
    // Newton polish; rejected if it leaves the bracket.
    for (int it = 0; it < 3; ++it) {
      const double d = trace_derivative(s);
      if (d == 0.0) break;
      const double next = s - F(s) / d;
      if (!(next >= lo - 1e-15 && next <= hi + 1e-15)) break;
      s = next;
    }
  }
  BandPoint b;
  b.m = m;
  b.l = l;
  b.lambda = s * s;
  b.a_of_l = m >= 0 ? s - m : -m - s;
  return b;
}

// ---------------------------------------------------------------------------

cplx BlochEigenfunction::bloch_wave(bool on_link, double x) const {
  const EdgeCoefficients& e = on_link ? link : upper;
  const double xi = on_link ? x : x - pi;
  return e.A * std::cos(s * xi) + e.B * std::sin(s * xi);
}

cplx BlochEigenfunction::bloch_wave_derivative(bool on_link, double x) const {
  const EdgeCoefficients& e = on_link ? link : upper;
  const double xi = on_link ? x : x - pi;
  return s * (-e.A * std::sin(s * xi) + e.B * std::cos(s * xi));
}

cplx BlochEigenfunction::value(bool on_link, double x) const {
  return std::exp(cplx(0.0, -l * x)) * bloch_wave(on_link, x);
}

double BlochEigenfunction::sup_norm(int samples_per_edge) const {
  double best = 0.0;
  for (int e = 0; e < 2; ++e) {
    const double start = e == 0 ? 0.0 : pi;
    for (int i = 0; i < samples_per_edge; ++i) {
      const double x = start + pi * i / (samples_per_edge - 1);
      best = std::max(best, std::abs(bloch_wave(e == 0, x)));
    }
  }
  return best;
}

namespace {

// integral over [a, b] of f, composite 20-point Gauss-Legendre
template <class F>
double integrate(F&& f, double a, double b, int panels) {
  using Q = boost::math::quadrature::gauss<double, 20>;
  double sum = 0.0;
  const double w = (b - a) / panels;
  for (int k = 0; k < panels; ++k) sum += Q::integrate(f, a + k * w, a + (k + 1) * w);
  return sum;
}

cplx cell_inner(const BlochEigenfunction& f, const BlochEigenfunction& g) {
  // exp(-i l x) factors cancel when both share l; kept general via value().
  const int panels = 4 + static_cast<int>(std::ceil(std::max(f.s, g.s)));
  cplx total;
  for (int e = 0; e < 2; ++e) {
    const bool on_link = e == 0;
    const double a = on_link ? 0.0 : pi;
    const double mult = on_link ? 1.0 : 2.0;
    auto re = [&](double x) { return (f.value(on_link, x) * std::conj(g.value(on_link, x))).real(); };
    auto im = [&](double x) { return (f.value(on_link, x) * std::conj(g.value(on_link, x))).imag(); };
    total += mult * cplx(integrate(re, a, a + pi, panels), integrate(im, a, a + pi, panels));
  }
  return total;
}

// Fills the edge coefficients from (value, derivative) of g at x = 0.
void propagate(BlochEigenfunction& f, cplx y0, cplx dy0) {
  const double s = f.s;
  f.link.A = y0;
  f.link.B = s > 0.0 ? dy0 / s : cplx{};
  const double c = std::cos(pi * s), sn = std::sin(pi * s);
  const cplx y = y0 * c + dy0 * sinc_pi(s);
  const cplx dy = -y0 * s * sn + dy0 * c;
  f.upper.A = y;
  f.upper.B = s > 0.0 ? 0.5 * dy / s : cplx{};
}

void normalize(BlochEigenfunction& f) {
  const double n2 = cell_inner(f, f).real();
  const double scale = 1.0 / std::sqrt(n2);
  f.link.A *= scale;
  f.link.B *= scale;
  f.upper.A *= scale;
  f.upper.B *= scale;
}

void rotate(BlochEigenfunction& f, cplx phase) {
  f.link.A *= phase;
  f.link.B *= phase;
  f.upper.A *= phase;
  f.upper.B *= phase;
}

void fix_phase(BlochEigenfunction& f) {
  const cplx v0 = f.link.A;
  const cplx d0 = f.s * f.link.B - cplx(0.0, f.l) * f.link.A;  // derivative of phi at 0
  const double scale = std::max(std::abs(v0), std::abs(d0) / std::max(1.0, f.s));
  if (std::abs(v0) > 1e-10 * scale) {
    rotate(f, std::conj(v0) / std::abs(v0));
    f.phase = BlochEigenfunction::Phase::value_real_nonnegative;
    f.link.A = f.link.A.real();
  } else {
    rotate(f, std::conj(d0) / std::abs(d0));
    f.phase = BlochEigenfunction::Phase::derivative_real_nonnegative;
  }
}

bool touching(int m, double l) { return m != 0 && std::abs(l) < 1e-14; }

BlochEigenfunction degenerate_mode(int m, bool cosine) {
  BlochEigenfunction f;
  f.m = m;
  f.l = 0.0;
  f.lambda = double(m) * m;
  f.s = std::abs(m);
  if (cosine) {
    propagate(f, 1.0, 0.0);
    f.phase = BlochEigenfunction::Phase::degenerate_cosine;
  } else {
    propagate(f, 0.0, 2.0 * f.s);  // 2 sin on the link, sin on the parallel edges
    f.phase = BlochEigenfunction::Phase::degenerate_sine;
  }
  normalize(f);
  return f;
}

}  // namespace

BlochEigenfunction bloch_eigenfunction(int m, double l) {
  if (!(l > -0.5 - 1e-15 && l <= 0.5 + 1e-15)) throw DomainError("quasimomentum outside (-1/2, 1/2]");
  if (touching(m, l)) return degenerate_mode(m, m > 0);

  const BandPoint b = band_closed_form(m, l);
  BlochEigenfunction f;
  f.m = m;
  f.l = l;
  f.lambda = b.lambda;
  f.s = std::abs(m + b.a_of_l);
  if (m == 0 && std::abs(l) < 1e-14) {
    propagate(f, 1.0, 0.0);
    normalize(f);
    return f;
  }

  // Eigenvector of the monodromy matrix for rho = exp(2 pi i l).
  const Eigen::Matrix2d M = monodromy_matrix(f.lambda);
  const cplx rho = std::exp(cplx(0.0, 2.0 * pi * l));
  const cplx v1a = M(0, 1), v1b = rho - M(0, 0);
  const cplx v2a = rho - M(1, 1), v2b = M(1, 0);
  const double n1 = std::hypot(std::abs(v1a), std::abs(v1b));
  const double n2 = std::hypot(std::abs(v2a), std::abs(v2b));
  if (std::max(n1, n2) < 1e-13) throw DomainError("bloch_eigenfunction: degenerate monodromy eigenspace");
  if (n1 >= n2) propagate(f, v1a, v1b);
  else propagate(f, v2a, v2b);
  normalize(f);
  fix_phase(f);
  return f;
}

std::vector<BlochEigenfunction> bloch_eigenspace(int m, double l) {
  if (touching(m, l)) return {degenerate_mode(m, true), degenerate_mode(m, false)};
  return {bloch_eigenfunction(m, l)};
}

cplx per_inner(const BlochEigenfunction& phi, const BlochEigenfunction& psi) { return cell_inner(phi, psi); }

double eigenfunction_condition_residual(const BlochEigenfunction& f) {
  const cplx rho = std::exp(cplx(0.0, 2.0 * pi * f.l));
  const double scale = std::max(1.0, f.s);
  // middle vertex: continuity and flux g_0'(pi) = 2 g_+'(pi)
  const double r1 = std::abs(f.bloch_wave(true, pi) - f.bloch_wave(false, pi));
  const double r2 = std::abs(f.bloch_wave_derivative(true, pi) - 2.0 * f.bloch_wave_derivative(false, pi)) / scale;
  // cell boundary: g(2 pi) = rho g(0), 2 g_+'(2 pi) = rho g_0'(0)
  const double r3 = std::abs(f.bloch_wave(false, 2.0 * pi) - rho * f.bloch_wave(true, 0.0));
  const double r4 =
      std::abs(2.0 * f.bloch_wave_derivative(false, 2.0 * pi) - rho * f.bloch_wave_derivative(true, 0.0)) / scale;
  return std::max({r1, r2, r3, r4});
}

void write_bands_csv(std::ostream& os, int m_min, int m_max, int l_samples, bool cross_check) {
  if (m_min > m_max) throw DomainError("empty band index range");
  if (l_samples < 2) throw DomainError("need at least two quasimomentum samples");
  os << "m,l,lambda,a_of_l,trM_of_lambda";
  if (cross_check) os << ",lambda_monodromy,discrepancy";
  os << '\n' << std::setprecision(17);
  for (int m = m_min; m <= m_max; ++m) {
    for (int i = 0; i < l_samples; ++i) {
      const double l = -0.5 + double(i) / (l_samples - 1);
      const BandPoint b = band_closed_form(m, l);
      os << m << ',' << l << ',' << b.lambda << ',' << b.a_of_l << ',' << monodromy_matrix(b.lambda).trace();
      if (cross_check) {
        const BandPoint c = band_from_monodromy(m, l);
        os << ',' << c.lambda << ',' << std::abs(c.lambda - b.lambda);
      }
      os << '\n';
    }
  }
}

double max_band_discrepancy(int m_min, int m_max, int l_samples) {
  double worst = 0.0;
  for (int m = m_min; m <= m_max; ++m)
    for (int i = 0; i < l_samples; ++i) {
      const double l = -0.5 + double(i) / (l_samples - 1);
      worst = std::max(worst, std::abs(band_from_monodromy(m, l).lambda - band_closed_form(m, l).lambda));
    }
  return worst;
}

}  // namespace necklace
