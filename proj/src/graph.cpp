#include "necklace/graph.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "necklace/errors.hpp"

namespace necklace {

std::string to_string(Boundary b) {
  return b == Boundary::periodic_cells ? "periodic_cells" : "dirichlet_truncation";
}

Boundary boundary_from_string(const std::string& s) {
  if (s == "dirichlet_truncation" || s == "dirichlet") return Boundary::dirichlet_truncation;
  if (s == "periodic_cells" || s == "periodic") return Boundary::periodic_cells;
  throw DomainError("unknown boundary '" + s + "'");
}

char edge_symbol(Edge e) {
  switch (e) {
    case Edge::link: return '0';
    case Edge::upper: return '+';
    case Edge::lower: return '-';
  }
  return '?';
}

NecklaceGrid::NecklaceGrid(int half_width, int points_per_edge, Boundary boundary)
    : half_width_(half_width), points_per_edge_(points_per_edge), boundary_(boundary) {
  if (half_width < 0) throw DomainError("half_width must be non-negative");
  if (points_per_edge < 4) throw DomainError("points_per_edge must be >= 4");
}

double NecklaceGrid::step() const { return std::numbers::pi / points_per_edge_; }

std::size_t NecklaceGrid::cell_stride(bool symmetric) const {
  const std::size_t M = points_per_edge_;
  return symmetric ? 2 * M : 3 * M - 1;
}

std::size_t NecklaceGrid::dof_count(bool symmetric) const {
  const std::size_t total = cell_count() * cell_stride(symmetric);
  return boundary_ == Boundary::dirichlet_truncation ? total - 1 : total;
}

std::ptrdiff_t NecklaceGrid::node_index(int cell, Edge e, int i, bool symmetric) const {
  const int C = cell_count();
  const int M = points_per_edge_;
  const int c = cell - first_cell();
  if (c < 0 || c >= C || i < 0 || i > M) throw DomainError("node outside grid");
  const auto S = static_cast<std::ptrdiff_t>(cell_stride(symmetric));
  const std::ptrdiff_t offset = boundary_ == Boundary::dirichlet_truncation ? 1 : 0;

  auto left_vertex = [&](int cc) -> std::ptrdiff_t {
    if (cc == C) {
      if (boundary_ == Boundary::dirichlet_truncation) return -1;
      cc = 0;
    }
    if (cc == 0 && boundary_ == Boundary::dirichlet_truncation) return -1;
    return cc * S - offset;
  };
  const std::ptrdiff_t base = c * S - offset;

  if (e == Edge::link) {
    if (i == 0) return left_vertex(c);
    return base + i;  // i == M is the middle vertex
  }
  if (i == 0) return base + M;
  if (i == M) return left_vertex(c + 1);
  if (e == Edge::upper || symmetric) return base + M + i;
  return base + 2 * M - 1 + i;
}

double NecklaceGrid::x_coordinate(int cell, Edge e, int i) const {
  const double pi = std::numbers::pi;
  const double start = 2.0 * pi * cell + (e == Edge::link ? 0.0 : pi);
  return start + i * step();
}

GraphFunction::GraphFunction(NecklaceGrid grid, bool symmetric)
    : grid_(grid), symmetric_(symmetric),
      values_(ComplexVector::Zero(static_cast<Eigen::Index>(grid.dof_count(symmetric)))) {}

GraphFunction::GraphFunction(NecklaceGrid grid, bool symmetric, ComplexVector values)
    : grid_(grid), symmetric_(symmetric), values_(std::move(values)) {
  if (static_cast<std::size_t>(values_.size()) != grid_.dof_count(symmetric_))
    throw GridMismatch("value vector length does not match the grid layout");
}

GraphFunction GraphFunction::from_real(const NecklaceGrid& grid, bool symmetric,
                                       const RealVector& values) {
  return GraphFunction(grid, symmetric, values.cast<std::complex<double>>());
}

std::complex<double> GraphFunction::at(int cell, Edge e, int i) const {
  const auto idx = grid_.node_index(cell, e, i, symmetric_);
  return idx < 0 ? std::complex<double>{} : values_[idx];
}

void GraphFunction::set(int cell, Edge e, int i, std::complex<double> v) {
  const auto idx = grid_.node_index(cell, e, i, symmetric_);
  if (idx >= 0) values_[idx] = v;
}

GraphFunction GraphFunction::to_full() const {
  if (!symmetric_) return *this;
  GraphFunction out(grid_, false);
  const int M = grid_.points_per_edge();
  for (int c = 0; c < grid_.cell_count(); ++c) {
    const int n = grid_.first_cell() + c;
    for (int e = 0; e < 3; ++e)
      for (int i = 0; i <= M; ++i) out.set(n, static_cast<Edge>(e), i, at(n, static_cast<Edge>(e), i));
  }
  return out;
}

GraphFunction GraphFunction::zero_extended() const {
  if (grid_.boundary() == Boundary::periodic_cells) return *this;
  GraphFunction out(grid_.with_boundary(Boundary::periodic_cells), symmetric_);
  // Dirichlet layout is the periodic layout shifted by the pinned first vertex.
  out.values_.tail(values_.size()) = values_;
  out.values_[0] = 0.0;
  return out;
}

GraphFunction& GraphFunction::operator+=(const GraphFunction& o) {
  if (!(grid_ == o.grid_) || symmetric_ != o.symmetric_) throw GridMismatch("operands on different grids");
  values_ += o.values_;
  return *this;
}

GraphFunction& GraphFunction::operator-=(const GraphFunction& o) {
  if (!(grid_ == o.grid_) || symmetric_ != o.symmetric_) throw GridMismatch("operands on different grids");
  values_ -= o.values_;
  return *this;
}

GraphFunction& GraphFunction::operator*=(std::complex<double> s) {
  values_ *= s;
  return *this;
}

GraphFunction operator+(GraphFunction a, const GraphFunction& b) { return a += b; }
GraphFunction operator-(GraphFunction a, const GraphFunction& b) { return a -= b; }
GraphFunction operator*(std::complex<double> s, GraphFunction a) { return a *= s; }

namespace {

// Visits every segment (i, i+1) of every stored edge with its multiplicity.
template <class F>
void for_each_segment(const NecklaceGrid& grid, bool symmetric, F&& f) {
  const int M = grid.points_per_edge();
  const int edges = symmetric ? 2 : 3;
  for (int c = 0; c < grid.cell_count(); ++c) {
    const int n = grid.first_cell() + c;
    for (int e = 0; e < edges; ++e) {
      const auto edge = static_cast<Edge>(e);
      const double mult = (symmetric && edge == Edge::upper) ? 2.0 : 1.0;
      for (int i = 0; i < M; ++i)
        f(grid.node_index(n, edge, i, symmetric), grid.node_index(n, edge, i + 1, symmetric), mult);
    }
  }
}

}  // namespace

RealVector quadrature_weights(const NecklaceGrid& grid, bool symmetric) {
  RealVector w = RealVector::Zero(static_cast<Eigen::Index>(grid.dof_count(symmetric)));
  const double half = 0.5 * grid.step();
  for_each_segment(grid, symmetric, [&](std::ptrdiff_t a, std::ptrdiff_t b, double mult) {
    if (a >= 0) w[a] += mult * half;
    if (b >= 0) w[b] += mult * half;
  });
  return w;
}

SparseMatrix stiffness_matrix(const NecklaceGrid& grid, bool symmetric) {
  const auto n = static_cast<Eigen::Index>(grid.dof_count(symmetric));
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * n);
  const double inv_h = 1.0 / grid.step();
  for_each_segment(grid, symmetric, [&](std::ptrdiff_t a, std::ptrdiff_t b, double mult) {
    const double s = mult * inv_h;
    if (a >= 0) trip.emplace_back(a, a, s);
    if (b >= 0) trip.emplace_back(b, b, s);
    if (a >= 0 && b >= 0) {
      trip.emplace_back(a, b, -s);
      trip.emplace_back(b, a, -s);
    }
  });
  SparseMatrix K(n, n);
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

std::complex<double> l2_inner(const GraphFunction& u, const GraphFunction& v) {
  if (!(u.grid() == v.grid()) || u.symmetric() != v.symmetric())
    throw GridMismatch("l2_inner: functions on different grids or layouts");
  const RealVector w = quadrature_weights(u.grid(), u.symmetric());
  return (u.values().array() * v.values().conjugate().array() * w.array()).sum();
}

double l2_norm(const GraphFunction& u) { return std::sqrt(std::abs(l2_inner(u, u))); }

GraphFunction apply_laplacian(const GraphFunction& u) {
  const RealVector w = quadrature_weights(u.grid(), u.symmetric());
  const SparseMatrix K = stiffness_matrix(u.grid(), u.symmetric());
  ComplexVector out = -(K.cast<std::complex<double>>() * u.values());
  out.array() /= w.array();
  return GraphFunction(u.grid(), u.symmetric(), std::move(out));
}

std::vector<VertexFlux> kirchhoff_flux_residual(const GraphFunction& u) {
  const auto& g = u.grid();
  const int M = g.points_per_edge();
  const int C = g.cell_count();
  const double h = g.step();
  auto forward = [&](int n, Edge e) {
    return (-3.0 * u.at(n, e, 0) + 4.0 * u.at(n, e, 1) - u.at(n, e, 2)) / (2.0 * h);
  };
  auto backward = [&](int n, Edge e) {
    return (3.0 * u.at(n, e, M) - 4.0 * u.at(n, e, M - 1) + u.at(n, e, M - 2)) / (2.0 * h);
  };

  std::vector<VertexFlux> out;
  out.reserve(2 * C);
  for (int c = 0; c < C; ++c) {
    const int n = g.first_cell() + c;
    const bool left_pinned = c == 0 && g.boundary() == Boundary::dirichlet_truncation;
    if (!left_pinned) {
      const int prev = c == 0 ? g.first_cell() + C - 1 : n - 1;
      const auto r = forward(n, Edge::link) - backward(prev, Edge::upper) - backward(prev, Edge::lower);
      out.push_back({n, false, g.x_coordinate(n, Edge::link, 0), std::abs(r)});
    }
    const auto r = backward(n, Edge::link) - forward(n, Edge::upper) - forward(n, Edge::lower);
    out.push_back({n, true, g.x_coordinate(n, Edge::link, M), std::abs(r)});
  }
  return out;
}

void write_csv(std::ostream& os, const GraphFunction& u) {
  const auto& g = u.grid();
  const int M = g.points_per_edge();
  os << "cell,edge,index,x,re,im\n";
  os << std::setprecision(17);
  for (int c = 0; c < g.cell_count(); ++c) {
    const int n = g.first_cell() + c;
    for (int e = 0; e < 3; ++e) {
      const auto edge = static_cast<Edge>(e);
      for (int i = 0; i <= M; ++i) {
        const auto v = u.at(n, edge, i);
        os << n << ',' << edge_symbol(edge) << ',' << i << ',' << g.x_coordinate(n, edge, i) << ','
           << v.real() << ',' << v.imag() << '\n';
      }
    }
  }
}

GraphFunction read_csv(std::istream& is, const NecklaceGrid& grid, bool symmetric) {
  GraphFunction out(grid, symmetric);
  std::string line;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header) {
      if (line.rfind("cell,edge,index,x,re,im", 0) != 0) throw SchemaError("graph function CSV: bad header");
      header = true;
      continue;
    }
    std::stringstream ss(line);
    std::string tok[6];
    for (auto& t : tok)
      if (!std::getline(ss, t, ',')) throw SchemaError("graph function CSV: short row");
    Edge e;
    if (tok[1] == "0") e = Edge::link;
    else if (tok[1] == "+") e = Edge::upper;
    else if (tok[1] == "-") e = Edge::lower;
    else throw SchemaError("graph function CSV: bad edge '" + tok[1] + "'");
    if (symmetric && e == Edge::lower) continue;
    out.set(std::stoi(tok[0]), e, std::stoi(tok[2]), {std::stod(tok[4]), std::stod(tok[5])});
  }
  if (!header) throw SchemaError("graph function CSV: empty input");
  return out;
}

}  // namespace necklace
