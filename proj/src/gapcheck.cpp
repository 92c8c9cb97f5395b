#include "necklace/gapcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "necklace/errors.hpp"
#include "necklace/spectrum.hpp"

namespace necklace {

namespace {

constexpr double pi = std::numbers::pi;
constexpr double resonance_tol = 1e-12;
constexpr int enumeration_cap = 4000;  // harmonics examined before falling back to the tail bound

bool odd_positive(int v) { return v > 0 && v % 2 == 1; }

// quasimomentum in [0, 1/2] with a(l) = a
double l_of_a(double a) {
  const double c = std::clamp((9.0 * std::cos(2.0 * pi * a) - 1.0) / 8.0, -1.0, 1.0);
  return std::acos(c) / (2.0 * pi);
}

// Lower bound of |sqrt(lambda_m(l)) - sqrt(omega^2 k^2 - alpha)| over m.
double tail_sqrt_bound(const FrequencyConfig& c, int k) {
  const double kk0 = double(k) * c.k0;
  const double deficit = kk0 / 2.0 - std::sqrt(kk0 * kk0 / 4.0 - c.alpha);
  return delta0() / 2.0 - deficit;
}

}  // namespace

void FrequencyConfig::validate() const {
  if (!odd_positive(k0)) throw DomainError("k0 must be an odd positive integer");
  if (!odd_positive(kappa)) throw DomainError("kappa must be an odd positive integer");
  if (!(alpha >= 0.0)) throw DomainError("alpha must be non-negative");
  if (!(A >= alpha)) throw DomainError("A must be >= alpha");
  if (!(p > 1.0)) throw DomainError("p must exceed 1");
  if (K < kappa || K % kappa != 0 || (K / kappa) % 2 == 0)
    throw DomainError("K must be an odd multiple of kappa");
}

FrequencyConfig FrequencyConfig::with_harmonics(int k0, int kappa, double alpha, double A, double p, int J) {
  if (J < 1) throw DomainError("need at least one harmonic");
  FrequencyConfig c{k0, kappa, alpha, A, p, kappa * (2 * J - 1)};
  c.validate();
  return c;
}

double delta0() { return 1.0 - std::acos(-7.0 / 9.0) / pi; }

PairDistance band_distance(int m, int k, double tau, bool sqrt_form) {
  const double ah = a_half();
  const double am = std::abs(double(m));
  // range of sqrt(lambda_m(l)) over l: endpoints at l = 0 and l = 1/2
  const double r0 = am;
  const double r1 = m >= 0 ? am + ah : am - ah;
  const double lo = std::min(r0, r1), hi = std::max(r0, r1);
  PairDistance d{m, k, 0.0, 0.0};
  if (sqrt_form) {
    if (tau < 0.0) throw DomainError("band_distance: omega^2 k^2 - alpha must be positive");
    const double t = std::sqrt(tau);
    if (t >= lo && t <= hi) {
      d.l = l_of_a(std::abs(t - am));
      d.distance = 0.0;
    } else if (t < lo) {
      d.distance = lo - t;
      d.l = lo == r0 ? 0.0 : 0.5;
    } else {
      d.distance = t - hi;
      d.l = hi == r0 ? 0.0 : 0.5;
    }
    return d;
  }
  const double l2 = lo * lo, h2 = hi * hi;
  if (tau >= l2 && tau <= h2) {
    d.l = l_of_a(std::abs(std::sqrt(std::max(tau, 0.0)) - am));
    d.distance = 0.0;
  } else if (tau < l2) {
    d.distance = l2 - tau;
    d.l = lo == r0 ? 0.0 : 0.5;
  } else {
    d.distance = tau - h2;
    d.l = hi == r0 ? 0.0 : 0.5;
  }
  return d;
}

double tail_lower_bound(const FrequencyConfig& c, int k) {
  const double kk0 = double(std::abs(k)) * c.k0;
  const double d0 = delta0();
  const double above = kk0 * d0 / 2.0 + d0 * d0 / 4.0 + c.alpha;  // |m| >= (kk0 + 1) / 2
  const double below = kk0 * d0 / 2.0 - d0 * d0 / 4.0 - c.alpha;  // |m| <= (kk0 - 1) / 2
  return std::min(above, below);
}

double delta_sqrt(const FrequencyConfig& c) {
  c.validate();
  const double w = c.omega();
  const int k_first = c.K + 2 * c.kappa;
  if (w * w * double(k_first) * k_first <= c.alpha)
    throw DomainError("delta_sqrt: omega^2 k^2 <= alpha for a harmonic beyond K");
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < enumeration_cap; ++i) {
    const int k = k_first + 2 * c.kappa * i;
    const double tau = w * w * double(k) * k - c.alpha;
    const int mmax = static_cast<int>(std::floor(w * k)) + 2;
    for (int m = -mmax; m <= mmax; ++m) best = std::min(best, band_distance(m, k, tau, true).distance);
    if (best <= 0.0 || tail_sqrt_bound(c, k + 2 * c.kappa) >= best) return best;
  }
  return std::min(best, tail_sqrt_bound(c, k_first + 2 * c.kappa * enumeration_cap));
}

GapCertificate delta_star(const FrequencyConfig& c) {
  c.validate();
  GapCertificate cert;
  cert.delta0 = delta0();
  const double w = c.omega();
  double best = std::numeric_limits<double>::infinity();
  int k = c.kappa;
  bool stopped = false;
  for (int i = 0; i < enumeration_cap; ++i) {
    k = c.kappa * (2 * i + 1);
    const double tau = w * w * double(k) * k - c.alpha;
    const int mmax = static_cast<int>(std::floor(w * k)) + 2;
    PairDistance per_k{0, k, 0.0, std::numeric_limits<double>::infinity()};
    for (int m = -mmax; m <= mmax; ++m) {
      const PairDistance d = band_distance(m, k, tau, false);
      if (d.distance < per_k.distance) per_k = d;
      if (d.distance < best) {
        best = d.distance;
        cert.worst = d;
      }
    }
    cert.pairs.push_back(per_k);
    const bool past_truncation = k >= c.K;
    if (best <= resonance_tol || (past_truncation && tail_lower_bound(c, k + 2 * c.kappa) >= best)) {
      stopped = true;
      break;
    }
  }
  cert.k_enumerated = k;
  cert.tail_bound = tail_lower_bound(c, k + 2 * c.kappa);
  cert.delta_star = stopped ? best : std::min(best, cert.tail_bound);

  std::ostringstream reg;
  reg << "enumerated " << c.kappa << " <= k <= " << k << "; analytic tail bound " << cert.tail_bound
      << " for k > " << k;
  cert.regions = reg.str();

  try {
    cert.delta = delta_sqrt(c);
  } catch (const DomainError&) {
    cert.delta = std::numeric_limits<double>::quiet_NaN();
  }
  cert.certified = cert.delta_star > resonance_tol && cert.delta > 0.0;
  return cert;
}

int minimal_kappa(int k0, double A, double alpha) {
  if (!odd_positive(k0)) throw DomainError("k0 must be an odd positive integer");
  if (!(A >= alpha && alpha >= 0.0)) throw DomainError("need A >= alpha >= 0");
  const double d0 = delta0();
  for (int kappa = 1; kappa < 100001; kappa += 2) {
    const double kk0 = double(kappa) * k0;
    // (i) sqrt(kk0^2/4 - A) >= kk0/2 - delta0/2, worst case at k = kappa
    const bool i1 = kk0 * d0 / 2.0 - d0 * d0 / 4.0 >= A;
    // (ii) kappa delta0 - 1/2 - A >= kappa delta0 / 2
    const bool i2 = kk0 * d0 - 0.5 - A >= kk0 * d0 / 2.0;
    // (iii) 1 - 2 a(1/2) - A / (kappa sqrt(xi)) >= delta0 / 2, xi >= 1 - 4A / (kappa k0)^2
    const double xi = 1.0 - 4.0 * A / (kk0 * kk0);
    const bool i3 = xi > 0.0 && d0 - A / (kk0 * std::sqrt(xi)) >= d0 / 2.0;
    if (!(i1 && i2 && i3)) continue;
    FrequencyConfig c{k0, kappa, alpha, A, 3.0, kappa};
    if (delta_star(c).certified) return kappa;
  }
  throw CertificationFailure("minimal_kappa: search bound exhausted");
}

int smallest_certified_kappa(int k0, double alpha, int kappa_limit) {
  for (int kappa = 1; kappa <= kappa_limit; kappa += 2) {
    FrequencyConfig c{k0, kappa, alpha, alpha, 3.0, kappa};
    if (delta_star(c).certified) return kappa;
  }
  throw CertificationFailure("smallest_certified_kappa: no certified kappa below the limit");
}

ModeSign classify_mode(const FrequencyConfig& c, int m, int k) {
  const long kk0 = std::labs(long(k)) * c.k0;
  if (kk0 % 2 == 0) throw DomainError("classify_mode: |k| k0 must be odd");
  const bool plus = 2L * std::labs(long(m)) >= kk0 + 1;
  const double w = c.omega();
  const double tau = w * w * double(k) * k - c.alpha;
  for (double l : {0.0, 0.5}) {
    const double v = band_closed_form(m, l).lambda - tau;
    if ((plus && !(v > 0.0)) || (!plus && !(v < 0.0))) {
      std::ostringstream msg;
      msg << "classify_mode: predicted sign " << (plus ? '+' : '-') << " for (m=" << m << ", k=" << k
          << ") contradicts lambda - omega^2 k^2 + alpha = " << v << " at l = " << l;
      throw CertificationFailure(msg.str());
    }
  }
  return plus ? ModeSign::plus : ModeSign::minus;
}

}  // namespace necklace
