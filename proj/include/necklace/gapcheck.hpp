#pragma once

// Non-resonance certificate for the shifted operators
//   L_k = -d^2/dx^2 - omega^2 k^2 + alpha,   omega = k0 / 2,   k in kappa * Z_odd,
// on the symmetric subspace, whose spectrum is the band set {lambda_m(l)}.

#include <string>
#include <vector>

namespace necklace {

struct FrequencyConfig {
  int k0 = 1;
  int kappa = 5;
  double alpha = 0.0;
  double A = 0.0;
  double p = 3.0;
  int K = 35;  // largest retained harmonic, an odd multiple of kappa

  double omega() const { return 0.5 * k0; }
  /// Number of retained positive harmonics k = kappa, 3 kappa, ..., K.
  int harmonic_count() const { return (K / kappa + 1) / 2; }
  int harmonic(int j) const { return kappa * (2 * j - 1); }  // j = 1..harmonic_count()

  /// Throws DomainError when an invariant fails.
  void validate() const;
  static FrequencyConfig with_harmonics(int k0, int kappa, double alpha, double A, double p, int J);
};

/// delta0 = 1 - 2 a(1/2) = 1 - arccos(-7/9) / pi.
double delta0();

struct PairDistance {
  int m = 0;
  int k = 0;
  double l = 0.0;         // minimizing quasimomentum
  double distance = 0.0;  // min over l of |lambda_m(l) - omega^2 k^2 + alpha| (or the sqrt version)
};

struct GapCertificate {
  double delta_star = 0.0;
  double delta = 0.0;
  double delta0 = 0.0;
  PairDistance worst;                // minimizer of delta_star
  std::vector<PairDistance> pairs;   // per-(m, k) minima of the enumerated region
  int k_enumerated = 0;              // enumeration covered kappa <= k <= k_enumerated
  double tail_bound = 0.0;           // analytic lower bound for every k > k_enumerated
  bool certified = false;
  std::string regions;               // which bound covered which harmonics
};

/// Exact min over l of |lambda_m(l) - tau| (sqrt = false) or |sqrt(lambda_m(l)) - sqrt(tau)|.
PairDistance band_distance(int m, int k, double tau, bool sqrt_form);

/// Lower bound of |lambda_m(l) - omega^2 k^2 + alpha| over all m for a single k
/// (case analysis of the gap around kk0/2, corrected algebra).
double tail_lower_bound(const FrequencyConfig& c, int k);

/// Certificate for delta*; delta_sqrt is filled too (over k > K).
GapCertificate delta_star(const FrequencyConfig& c);

/// inf |sqrt(lambda_m(l)) - sqrt(omega^2 k^2 - alpha)| over k in kappa Z_odd, |k| > K.
/// Throws DomainError if omega^2 k^2 <= alpha for some such k.
double delta_sqrt(const FrequencyConfig& c);

/// Smallest odd kappa satisfying the three sufficient inequalities, checked again
/// with the exact certificate (advanced to the next odd kappa if that fails).
int minimal_kappa(int k0, double A, double alpha);

/// Smallest odd kappa whose exact certificate gives delta_star > 0 and delta > 0.
int smallest_certified_kappa(int k0, double alpha, int kappa_limit = 1001);

enum class ModeSign { plus = 1, minus = -1 };

/// + iff |m| >= (|k| k0 + 1) / 2. Throws CertificationFailure if the sign of
/// lambda_m(l) - omega^2 k^2 + alpha at l = 0 or l = 1/2 disagrees.
ModeSign classify_mode(const FrequencyConfig& c, int m, int k);

}  // namespace necklace
