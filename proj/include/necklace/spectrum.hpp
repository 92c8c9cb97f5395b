#pragma once

// Floquet-Bloch band structure of the Kirchhoff Laplacian on the necklace graph,
// restricted to the symmetric subspace (u_+ = u_-).

#include <complex>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

namespace necklace {

/// a(l) = arccos((8 cos(2 pi l) + 1) / 9) / (2 pi), in [0, a(1/2)].
double a_of_l(double l);

/// a(1/2) = arccos(-7/9) / (2 pi).
double a_half();

/// tr M(lambda) in closed form: (9 cos(2 pi sqrt(lambda)) - 1) / 4.
double hill_discriminant(double lambda);

/// Transfer matrix of (value, derivative) across an edge of length pi.
Eigen::Matrix2d edge_transfer(double lambda);

/// One-cell transfer D(2) T D(1/2) T on the symmetric subspace; det = 1.
Eigen::Matrix2d monodromy_matrix(double lambda);

struct BandPoint {
  int m = 0;
  double l = 0.0;
  double a_of_l = 0.0;
  double lambda = 0.0;
};

/// lambda_m(l) = (a(l) + m)^2.
BandPoint band_closed_form(int m, double l);

/// lambda_m(1/2) from the expanded quadratic in m.
double band_at_half(int m);

/// Solves tr M(lambda) = 2 cos(2 pi l) on the branch bracket of band m using the
/// numerically multiplied monodromy matrix. Throws BracketFailure.
BandPoint band_from_monodromy(int m, double l);

/// Coefficients of y(xi) = A cos(s xi) + B sin(s xi) on one edge, xi the distance
/// from the edge's left end (x = 0 for the link, x = pi for the parallel edges).
struct EdgeCoefficients {
  std::complex<double> A;
  std::complex<double> B;
};

/// Normalized periodic eigenfunction phi_m(l, .) = exp(-i l x) g(l, x) on the
/// reference cell [0, 2 pi), g the quasiperiodic Bloch wave. Symmetric: the lower
/// edge carries the upper edge's coefficients.
struct BlochEigenfunction {
  int m = 0;
  double l = 0.0;
  double lambda = 0.0;
  double s = 0.0;  // sqrt(lambda)
  EdgeCoefficients link;
  EdgeCoefficients upper;
  enum class Phase { value_real_nonnegative, derivative_real_nonnegative, degenerate_cosine, degenerate_sine };
  Phase phase = Phase::value_real_nonnegative;

  /// Bloch wave g(l, x) for x in [0, pi] on the link (parallel edges: x in [pi, 2 pi]).
  std::complex<double> bloch_wave(bool on_link, double x) const;
  /// phi_m(l, x) = exp(-i l x) g(l, x).
  std::complex<double> value(bool on_link, double x) const;
  /// Derivative of g with respect to x.
  std::complex<double> bloch_wave_derivative(bool on_link, double x) const;

  /// max |phi| over the cell, from dense sampling of every edge.
  double sup_norm(int samples_per_edge = 2001) const;
};

/// Builds phi_m(l, .). At l = 0 with m != 0 the symmetric eigenspace is two
/// dimensional; m > 0 selects the cosine mode, m < 0 the (2 sin, sin, sin) mode.
BlochEigenfunction bloch_eigenfunction(int m, double l);

/// Basis of the symmetric eigenspace for lambda_m(l): one function, or two at band touchings.
std::vector<BlochEigenfunction> bloch_eigenspace(int m, double l);

/// <phi, psi>_{per,2} over the three edges of the reference cell.
std::complex<double> per_inner(const BlochEigenfunction& phi, const BlochEigenfunction& psi);

/// Residuals of the defining conditions (continuity, flux, quasiperiodicity) at
/// both cell vertices for the stored coefficients.
double eigenfunction_condition_residual(const BlochEigenfunction& phi);

void write_bands_csv(std::ostream& os, int m_min, int m_max, int l_samples, bool cross_check);

/// Largest |closed form - monodromy| over the grid used by write_bands_csv.
double max_band_discrepancy(int m_min, int m_max, int l_samples);

}  // namespace necklace
