#pragma once

// Truncated necklace graph, discretized functions and the Kirchhoff Laplacian.
//
// Cell n covers [2 pi n, 2 pi (n+1)]. The link edge (edge 0) occupies
// [2 pi n, 2 pi n + pi], the two parallel edges (+ and -) occupy
// [2 pi n + pi, 2 pi (n+1)]. Every edge carries M+1 uniformly spaced nodes with
// spacing h = pi / M; nodes at the vertices are shared degrees of freedom, so
// continuity at the vertices holds by construction.
//
// Degree-of-freedom layout per cell (stride S):
//   [left vertex] [link interior, M-1] [middle vertex] [upper interior, M-1] [lower interior, M-1]
// Symmetric functions (u_+ = u_-) omit the lower block, giving S = 2M; otherwise S = 3M - 1.
// With Dirichlet truncation the outermost two vertices are pinned to zero and are
// not degrees of freedom.

#include <complex>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace necklace {

enum class Boundary { dirichlet_truncation, periodic_cells };

enum class Edge : int { link = 0, upper = 1, lower = 2 };

std::string to_string(Boundary b);
Boundary boundary_from_string(const std::string& s);
char edge_symbol(Edge e);

class NecklaceGrid {
 public:
  NecklaceGrid() = default;
  /// Cells n in {-half_width, ..., half_width}; points_per_edge M >= 4.
  NecklaceGrid(int half_width, int points_per_edge,
               Boundary boundary = Boundary::dirichlet_truncation);

  int half_width() const { return half_width_; }
  int cell_count() const { return 2 * half_width_ + 1; }
  int first_cell() const { return -half_width_; }
  int points_per_edge() const { return points_per_edge_; }
  double step() const;
  Boundary boundary() const { return boundary_; }

  std::size_t cell_stride(bool symmetric) const;
  std::size_t dof_count(bool symmetric) const;

  /// Degree-of-freedom index of node i in [0, M] on edge e of cell n, or -1 for a
  /// vertex pinned by Dirichlet truncation. For symmetric layouts the lower edge
  /// aliases the upper one.
  std::ptrdiff_t node_index(int cell, Edge e, int i, bool symmetric) const;

  double x_coordinate(int cell, Edge e, int i) const;

  /// Same grid with periodic cell identification (used for zero extension).
  NecklaceGrid with_boundary(Boundary b) const { return {half_width_, points_per_edge_, b}; }

  friend bool operator==(const NecklaceGrid&, const NecklaceGrid&) = default;

 private:
  int half_width_ = 0;
  int points_per_edge_ = 4;
  Boundary boundary_ = Boundary::dirichlet_truncation;
};

using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

class GraphFunction {
 public:
  GraphFunction() = default;
  GraphFunction(NecklaceGrid grid, bool symmetric);
  GraphFunction(NecklaceGrid grid, bool symmetric, ComplexVector values);

  /// Samples f(cell, edge, x_global) on every node. With symmetric = true only the
  /// link and upper edges are sampled.
  template <class F>
  static GraphFunction sample(const NecklaceGrid& grid, bool symmetric, F&& f);

  static GraphFunction from_real(const NecklaceGrid& grid, bool symmetric, const RealVector& values);

  const NecklaceGrid& grid() const { return grid_; }
  bool symmetric() const { return symmetric_; }
  const ComplexVector& values() const { return values_; }
  ComplexVector& values() { return values_; }
  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }

  /// Value at a node; pinned vertices return 0.
  std::complex<double> at(int cell, Edge e, int i) const;
  void set(int cell, Edge e, int i, std::complex<double> v);

  RealVector real() const { return values_.real(); }

  /// Expands a symmetric function to the full three-edge layout.
  GraphFunction to_full() const;

  /// Same node values on a periodic grid; pinned vertices become explicit zeros.
  GraphFunction zero_extended() const;

  GraphFunction& operator+=(const GraphFunction& o);
  GraphFunction& operator-=(const GraphFunction& o);
  GraphFunction& operator*=(std::complex<double> s);

 private:
  NecklaceGrid grid_;
  bool symmetric_ = false;
  ComplexVector values_;
};

GraphFunction operator+(GraphFunction a, const GraphFunction& b);
GraphFunction operator-(GraphFunction a, const GraphFunction& b);
GraphFunction operator*(std::complex<double> s, GraphFunction a);

/// Trapezoidal quadrature weights of the layout (the lumped mass matrix). Parallel
/// edges count twice in the symmetric layout.
RealVector quadrature_weights(const NecklaceGrid& grid, bool symmetric);

/// Stiffness matrix K with u^T K u = sum over segments of h * (du/h)^2.
SparseMatrix stiffness_matrix(const NecklaceGrid& grid, bool symmetric);

/// <u, v> = integral of u * conj(v) over the truncated graph.
std::complex<double> l2_inner(const GraphFunction& u, const GraphFunction& v);
double l2_norm(const GraphFunction& u);

/// Discrete Kirchhoff Laplacian Delta_h = -W^{-1} K.
GraphFunction apply_laplacian(const GraphFunction& u);

struct VertexFlux {
  int cell;
  bool middle;  // x = 2 pi n + pi; otherwise x = 2 pi n
  double x;
  double residual;
};

/// |u_0' - u_+' - u_-'| at every unpinned vertex from second-order one-sided stencils.
std::vector<VertexFlux> kirchhoff_flux_residual(const GraphFunction& u);

void write_csv(std::ostream& os, const GraphFunction& u);
GraphFunction read_csv(std::istream& is, const NecklaceGrid& grid, bool symmetric);

// ---------------------------------------------------------------------------

template <class F>
GraphFunction GraphFunction::sample(const NecklaceGrid& grid, bool symmetric, F&& f) {
  GraphFunction out(grid, symmetric);
  const int M = grid.points_per_edge();
  const int edges = symmetric ? 2 : 3;
  for (int c = 0; c < grid.cell_count(); ++c) {
    const int n = grid.first_cell() + c;
    for (int e = 0; e < edges; ++e) {
      const auto edge = static_cast<Edge>(e);
      for (int i = 0; i <= M; ++i) {
        const auto idx = grid.node_index(n, edge, i, symmetric);
        if (idx >= 0) out.values_[idx] = f(n, edge, grid.x_coordinate(n, edge, i));
      }
    }
  }
  return out;
}

}  // namespace necklace
