#pragma once

// Discrete Bloch transform over the cell index of a (2N+1)-cell periodic grid.
//
//   u~(l_j, x) = sum_n u(x + 2 pi n) exp(-i l_j (x + 2 pi n)),   l_j = j / (2N+1)
//   u(x + 2 pi n) = (2N+1)^{-1} sum_j exp(i l_j (x + 2 pi n)) u~(l_j, x)
//
// so that <u, v> = (2N+1)^{-1} sum_j <u~(l_j), v~(l_j)>_per exactly. Cell functions use
// the per-cell layout of NecklaceGrid (left vertex, link interior, middle vertex,
// upper interior[, lower interior]); the right vertex is the next cell's left one.

#include <complex>
#include <iosfwd>
#include <vector>

#include "necklace/graph.hpp"
#include "necklace/spectrum.hpp"

namespace necklace {

struct BlochField {
  NecklaceGrid grid;  // periodic grid of the transformed function
  bool symmetric = true;
  std::vector<double> l;              // l_j for j = -N..N, stored at index j + N
  std::vector<ComplexVector> cells;   // u~(l_j, .) on one cell

  int half_width() const { return grid.half_width(); }
};

std::vector<double> quasimomentum_grid(int half_width);

/// Trapezoidal weights of one periodic cell (vertex weight 3h/2).
RealVector cell_weights(int points_per_edge, bool symmetric);

/// Local coordinate x in [0, 2 pi) of every node in the cell layout.
RealVector cell_coordinates(int points_per_edge, bool symmetric);

std::complex<double> cell_inner(const ComplexVector& f, const ComplexVector& g, const RealVector& weights);

/// Dirichlet inputs are zero-extended to the periodic grid first.
BlochField bloch_forward(const GraphFunction& u);
GraphFunction bloch_inverse(const BlochField& f);

/// phi_m(l, .) sampled on the cell nodes. With discrete_normalize the samples are
/// rescaled to unit trapezoidal norm; the samples are exact eigenvectors of the
/// discrete quasiperiodic cell problem, so the rescaled family is orthonormal.
ComplexVector sample_eigenfunction(const BlochEigenfunction& phi, int points_per_edge, bool symmetric,
                                   bool discrete_normalize = true);

struct BandCoefficients {
  int m_max = 0;
  std::vector<double> l;
  Eigen::MatrixXcd values;   // row m + m_max, column j + N
  double captured_fraction = 0.0;

  std::complex<double> at(int m, int j) const { return values(m + m_max, j + (values.cols() - 1) / 2); }
};

/// Projections <u~(l_j), phi_m(l_j)>_per for |m| <= m_max. At l = 0 the rows m > 0
/// hold the cosine mode and m < 0 the sine mode of the touching pair.
BandCoefficients band_coefficients(const BlochField& f, int m_max);

/// Inverse of band_coefficients on the span of the sampled eigenfunctions.
BlochField from_band_coefficients(const NecklaceGrid& periodic_grid, bool symmetric, const BandCoefficients& c);

void write_bloch_csv(std::ostream& os, const BlochField& f);
void write_coefficients_csv(std::ostream& os, const BandCoefficients& c);

}  // namespace necklace
