#include "necklace/bloch.hpp"

#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>

#include "necklace/errors.hpp"

namespace necklace {

namespace {
constexpr double pi = std::numbers::pi;
using cplx = std::complex<double>;
}  // namespace

std::vector<double> quasimomentum_grid(int half_width) {
  const int C = 2 * half_width + 1;
  std::vector<double> l(C);
  for (int j = -half_width; j <= half_width; ++j) l[j + half_width] = double(j) / C;
  return l;
}

RealVector cell_weights(int points_per_edge, bool symmetric) {
  return quadrature_weights(NecklaceGrid(0, points_per_edge, Boundary::periodic_cells), symmetric);
}

RealVector cell_coordinates(int points_per_edge, bool symmetric) {
  const NecklaceGrid g(0, points_per_edge, Boundary::periodic_cells);
  RealVector x(static_cast<Eigen::Index>(g.dof_count(symmetric)));
  const int edges = symmetric ? 2 : 3;
  for (int e = 0; e < edges; ++e)
    for (int i = 0; i < points_per_edge; ++i)
      x[g.node_index(0, static_cast<Edge>(e), i, symmetric)] = g.x_coordinate(0, static_cast<Edge>(e), i);
  return x;
}

cplx cell_inner(const ComplexVector& f, const ComplexVector& g, const RealVector& w) {
  return (f.array() * g.conjugate().array() * w.array()).sum();
}

BlochField bloch_forward(const GraphFunction& input) {
  const GraphFunction u = input.zero_extended();
  const auto& grid = u.grid();
  const int N = grid.half_width();
  const int C = grid.cell_count();
  const auto S = static_cast<Eigen::Index>(grid.cell_stride(u.symmetric()));
  const RealVector x = cell_coordinates(grid.points_per_edge(), u.symmetric());

  BlochField f;
  f.grid = grid;
  f.symmetric = u.symmetric();
  f.l = quasimomentum_grid(N);
  f.cells.assign(C, ComplexVector::Zero(S));
  for (int j = 0; j < C; ++j) {
    const double l = f.l[j];
    ComplexVector& out = f.cells[j];
    for (int c = 0; c < C; ++c) {
      const int n = grid.first_cell() + c;
      const auto block = u.values().segment(c * S, S);
      for (Eigen::Index k = 0; k < S; ++k) out[k] += block[k] * std::exp(cplx(0.0, -l * (x[k] + 2.0 * pi * n)));
    }
  }
  return f;
}

GraphFunction bloch_inverse(const BlochField& f) {
  const auto& grid = f.grid;
  if (grid.boundary() != Boundary::periodic_cells) throw GridMismatch("bloch_inverse: field grid must be periodic");
  const int C = grid.cell_count();
  if (static_cast<int>(f.cells.size()) != C) throw GridMismatch("bloch_inverse: wrong number of quasimomenta");
  const auto S = static_cast<Eigen::Index>(grid.cell_stride(f.symmetric));
  const RealVector x = cell_coordinates(grid.points_per_edge(), f.symmetric);

  GraphFunction u(grid, f.symmetric);
  for (int c = 0; c < C; ++c) {
    const int n = grid.first_cell() + c;
    auto block = u.values().segment(c * S, S);
    for (int j = 0; j < C; ++j) {
      if (f.cells[j].size() != S) throw GridMismatch("bloch_inverse: cell function length");
      for (Eigen::Index k = 0; k < S; ++k)
        block[k] += std::exp(cplx(0.0, f.l[j] * (x[k] + 2.0 * pi * n))) * f.cells[j][k];
    }
    block /= double(C);
  }
  return u;
}

ComplexVector sample_eigenfunction(const BlochEigenfunction& phi, int M, bool symmetric, bool discrete_normalize) {
  const NecklaceGrid g(0, M, Boundary::periodic_cells);
  ComplexVector v(static_cast<Eigen::Index>(g.dof_count(symmetric)));
  const int edges = symmetric ? 2 : 3;
  for (int e = 0; e < edges; ++e) {
    const auto edge = static_cast<Edge>(e);
    for (int i = 0; i < M; ++i) v[g.node_index(0, edge, i, symmetric)] = phi.value(edge == Edge::link, g.x_coordinate(0, edge, i));
  }
  if (discrete_normalize) v /= std::sqrt(cell_inner(v, v, cell_weights(M, symmetric)).real());
  return v;
}

BandCoefficients band_coefficients(const BlochField& f, int m_max) {
  if (m_max < 0) throw DomainError("m_max must be non-negative");
  const int C = static_cast<int>(f.cells.size());
  const int M = f.grid.points_per_edge();
  const RealVector w = cell_weights(M, f.symmetric);
  BandCoefficients out;
  out.m_max = m_max;
  out.l = f.l;
  out.values = Eigen::MatrixXcd::Zero(2 * m_max + 1, C);
  double captured = 0.0, total = 0.0;
  for (int j = 0; j < C; ++j) {
    total += cell_inner(f.cells[j], f.cells[j], w).real();
    for (int m = -m_max; m <= m_max; ++m) {
      const ComplexVector phi = sample_eigenfunction(bloch_eigenfunction(m, f.l[j]), M, f.symmetric);
      const cplx c = cell_inner(f.cells[j], phi, w);
      out.values(m + m_max, j) = c;
      captured += std::norm(c);
    }
  }
  out.captured_fraction = total > 0.0 ? captured / total : 1.0;
  return out;
}

BlochField from_band_coefficients(const NecklaceGrid& grid, bool symmetric, const BandCoefficients& c) {
  if (grid.boundary() != Boundary::periodic_cells) throw GridMismatch("from_band_coefficients: grid must be periodic");
  const int C = grid.cell_count();
  if (c.values.cols() != C) throw GridMismatch("from_band_coefficients: quasimomentum count");
  BlochField f;
  f.grid = grid;
  f.symmetric = symmetric;
  f.l = quasimomentum_grid(grid.half_width());
  const auto S = static_cast<Eigen::Index>(grid.cell_stride(symmetric));
  f.cells.assign(C, ComplexVector::Zero(S));
  for (int j = 0; j < C; ++j)
    for (int m = -c.m_max; m <= c.m_max; ++m) {
      const cplx a = c.values(m + c.m_max, j);
      if (a == cplx{}) continue;
      f.cells[j] += a * sample_eigenfunction(bloch_eigenfunction(m, f.l[j]), grid.points_per_edge(), symmetric);
    }
  return f;
}

void write_bloch_csv(std::ostream& os, const BlochField& f) {
  const int N = f.half_width();
  const int M = f.grid.points_per_edge();
  const NecklaceGrid g(0, M, Boundary::periodic_cells);
  const int edges = f.symmetric ? 2 : 3;
  os << "j,l_j,edge,index,re,im\n" << std::setprecision(17);
  for (std::size_t jj = 0; jj < f.cells.size(); ++jj) {
    for (int e = 0; e < edges; ++e) {
      const auto edge = static_cast<Edge>(e);
      for (int i = 0; i < M; ++i) {
        const cplx v = f.cells[jj][g.node_index(0, edge, i, f.symmetric)];
        os << int(jj) - N << ',' << f.l[jj] << ',' << edge_symbol(edge) << ',' << i << ',' << v.real() << ','
           << v.imag() << '\n';
      }
    }
  }
}

void write_coefficients_csv(std::ostream& os, const BandCoefficients& c) {
  const int N = static_cast<int>(c.values.cols() - 1) / 2;
  os << "m,j,l_j,re,im,abs2\n" << std::setprecision(17);
  for (int m = -c.m_max; m <= c.m_max; ++m)
    for (int j = -N; j <= N; ++j) {
      const cplx v = c.values(m + c.m_max, j + N);
      os << m << ',' << j << ',' << c.l[j + N] << ',' << v.real() << ',' << v.imag() << ',' << std::norm(v) << '\n';
    }
}

}  // namespace necklace
