#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "necklace/errors.hpp"
#include "necklace/graph.hpp"

using namespace necklace;
using std::numbers::pi;

namespace {

GraphFunction random_function(const NecklaceGrid& g, bool symmetric, std::mt19937& rng) {
  std::normal_distribution<double> d;
  GraphFunction u(g, symmetric);
  for (auto& v : u.values()) v = {d(rng), d(rng)};
  return u;
}

// max |Delta_h u + m^2 u| for u = cos(m x) on a periodic grid
double cosine_defect(int M, int m) {
  const NecklaceGrid g(2, M, Boundary::periodic_cells);
  const auto u = GraphFunction::sample(g, true, [&](int, Edge, double x) { return std::cos(m * x); });
  auto r = apply_laplacian(u);
  r.values() += double(m * m) * u.values();
  return r.values().cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("node layout covers every degree of freedom once") {
  for (auto b : {Boundary::dirichlet_truncation, Boundary::periodic_cells})
    for (bool sym : {false, true}) {
      const NecklaceGrid g(3, 6, b);
      const int M = g.points_per_edge();
      // interior points of the stored edges plus two vertices per cell
      const std::size_t per_cell = (sym ? 2 : 3) * (M - 1) + 2;
      const std::size_t pinned = b == Boundary::dirichlet_truncation ? 1 : 0;
      CHECK(g.dof_count(sym) == g.cell_count() * per_cell - pinned);

      std::set<std::ptrdiff_t> seen;
      for (int n = g.first_cell(); n < g.first_cell() + g.cell_count(); ++n)
        for (int e = 0; e < (sym ? 2 : 3); ++e)
          for (int i = 0; i <= M; ++i) {
            const auto idx = g.node_index(n, static_cast<Edge>(e), i, sym);
            if (idx >= 0) seen.insert(idx);
          }
      CHECK(seen.size() == g.dof_count(sym));
      CHECK(*seen.begin() == 0);
      CHECK(*seen.rbegin() == static_cast<std::ptrdiff_t>(g.dof_count(sym)) - 1);
    }
}

TEST_CASE("vertices are shared between the three incident edges") {
  const NecklaceGrid g(1, 5, Boundary::dirichlet_truncation);
  CHECK(g.node_index(0, Edge::link, 5, false) == g.node_index(0, Edge::upper, 0, false));
  CHECK(g.node_index(0, Edge::link, 5, false) == g.node_index(0, Edge::lower, 0, false));
  CHECK(g.node_index(0, Edge::upper, 5, false) == g.node_index(1, Edge::link, 0, false));
  CHECK(g.node_index(0, Edge::lower, 5, false) == g.node_index(1, Edge::link, 0, false));
  CHECK(g.node_index(-1, Edge::link, 0, false) == -1);
  CHECK(g.node_index(1, Edge::upper, 5, false) == -1);
  CHECK(g.node_index(0, Edge::lower, 2, true) == g.node_index(0, Edge::upper, 2, true));
}

TEST_CASE("l2_inner of the constant on one cell is 3 pi") {
  for (bool sym : {false, true}) {
    const NecklaceGrid g(0, 8, Boundary::periodic_cells);
    const auto one = GraphFunction::sample(g, sym, [](int, Edge, double) { return 1.0; });
    CHECK(std::abs(l2_inner(one, one) - 3.0 * pi) < 1e-13);
  }
}

TEST_CASE("l2_inner vanishes for disjoint edge supports") {
  const NecklaceGrid g(1, 8);
  auto u = GraphFunction::sample(g, false, [](int n, Edge e, double x) {
    return (n == 0 && e == Edge::link) ? std::sin(x) : 0.0;
  });
  auto v = GraphFunction::sample(g, false, [](int n, Edge e, double x) {
    return (n == 0 && e == Edge::upper) ? std::sin(x) : 0.0;
  });
  CHECK(std::abs(l2_inner(u, v)) < 1e-15);
}

TEST_CASE("l2_inner of sin on one link") {
  for (int M : {8, 16, 32}) {
    const NecklaceGrid g(1, M);
    auto u = GraphFunction::sample(g, false, [](int n, Edge e, double x) {
      return (n == 0 && e == Edge::link) ? std::sin(x) : 0.0;
    });
    const double h = g.step();
    CHECK(std::abs(l2_inner(u, u).real() - pi / 2) <= h * h);
  }
}

TEST_CASE("l2_inner is conjugate linear in the second argument") {
  std::mt19937 rng(1);
  const NecklaceGrid g(2, 6);
  auto u = random_function(g, false, rng), v = random_function(g, false, rng);
  const std::complex<double> c(0.3, -1.7);
  CHECK(std::abs(l2_inner(u, c * v) - std::conj(c) * l2_inner(u, v)) < 1e-12);
  CHECK(std::abs(l2_inner(c * u, v) - c * l2_inner(u, v)) < 1e-12);
}

TEST_CASE("grid mismatch is rejected") {
  const GraphFunction a(NecklaceGrid(1, 6), false), b(NecklaceGrid(2, 6), false);
  CHECK_THROWS_AS(l2_inner(a, b), GridMismatch);
  CHECK_THROWS_AS(NecklaceGrid(1, 3), DomainError);
}

TEST_CASE("Laplacian annihilates constants") {
  for (bool sym : {false, true}) {
    const NecklaceGrid g(2, 8, Boundary::periodic_cells);
    const auto one = GraphFunction::sample(g, sym, [](int, Edge, double) { return 1.0; });
    CHECK(apply_laplacian(one).values().cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("cosine mode is an eigenfunction with eigenvalue m^2 up to O(h^2)") {
  for (int m : {1, 2, 3}) {
    const double e1 = cosine_defect(16, m), e2 = cosine_defect(32, m), e3 = cosine_defect(64, m);
    CHECK(e1 < 0.1 * m * m);
    CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.05));
    CHECK(e2 / e3 == doctest::Approx(4.0).epsilon(0.05));
  }
}

TEST_CASE("samples of the cosine mode are exact discrete eigenvectors") {
  // -Delta_h cos(m x) = (4/h^2) sin^2(m h / 2) cos(m x) at every node, vertices included.
  const NecklaceGrid g(2, 12, Boundary::periodic_cells);
  const int m = 3;
  const double h = g.step();
  const double mu = 4.0 / (h * h) * std::pow(std::sin(m * h / 2.0), 2);
  const auto u = GraphFunction::sample(g, false, [&](int, Edge, double x) { return std::cos(m * x); });
  auto r = apply_laplacian(u);
  r.values() += mu * u.values();
  CHECK(r.values().cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("discrete Laplacian is symmetric and negative semidefinite") {
  std::mt19937 rng(7);
  for (auto b : {Boundary::dirichlet_truncation, Boundary::periodic_cells})
    for (bool sym : {false, true}) {
      const NecklaceGrid g(3, 7, b);
      auto u = random_function(g, sym, rng), v = random_function(g, sym, rng);
      const auto lhs = l2_inner(apply_laplacian(u), v);
      const auto rhs = l2_inner(u, apply_laplacian(v));
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
      CHECK(l2_inner(apply_laplacian(u), u).real() <= 0.0);
      const SparseMatrix K = stiffness_matrix(g, sym);
      CHECK((Eigen::MatrixXd(K) - Eigen::MatrixXd(K).transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("symmetric storage agrees with the full layout") {
  std::mt19937 rng(3);
  const NecklaceGrid g(2, 6);
  const auto u = random_function(g, true, rng);
  const auto full = apply_laplacian(u.to_full());
  const auto sym = apply_laplacian(u).to_full();
  CHECK((full.values() - sym.values()).cwiseAbs().maxCoeff() < 1e-10);
  for (int n = -2; n <= 2; ++n)
    for (int i = 0; i <= 6; ++i) CHECK(full.at(n, Edge::upper, i) == full.at(n, Edge::lower, i));
  CHECK(std::abs(l2_inner(u, u) - l2_inner(u.to_full(), u.to_full())) < 1e-12);
}

TEST_CASE("flux residual") {
  const NecklaceGrid g(2, 16, Boundary::periodic_cells);
  SUBCASE("constant") {
    const auto one = GraphFunction::sample(g, false, [](int, Edge, double) { return 2.5; });
    for (const auto& f : kirchhoff_flux_residual(one)) CHECK(f.residual < 1e-12);
  }
  SUBCASE("antisymmetric mode") {
    const int m = 3;
    const auto u = GraphFunction::sample(g, false, [&](int, Edge e, double x) {
      if (e == Edge::link) return 0.0;
      return (e == Edge::upper ? 1.0 : -1.0) * std::sin(m * x);
    });
    for (const auto& f : kirchhoff_flux_residual(u)) CHECK(f.residual < 1e-10);
  }
  SUBCASE("ramp on one link") {
    const double slope = 0.75;
    GraphFunction u(g, false);
    for (int i = 0; i <= g.points_per_edge(); ++i) u.set(0, Edge::link, i, slope * i * g.step());
    for (const auto& f : kirchhoff_flux_residual(u))
      if (f.cell == 0 && !f.middle) CHECK(f.residual == doctest::Approx(slope).epsilon(1e-12));
  }
}

TEST_CASE("zero extension keeps values and pins the outer vertex") {
  std::mt19937 rng(5);
  const NecklaceGrid g(2, 5);
  const auto u = random_function(g, true, rng);
  const auto e = u.zero_extended();
  CHECK(e.grid().boundary() == Boundary::periodic_cells);
  CHECK(e.at(-2, Edge::link, 0) == std::complex<double>(0.0));
  for (int n = -2; n <= 2; ++n)
    for (int i = 0; i <= 5; ++i) CHECK(e.at(n, Edge::upper, i) == u.at(n, Edge::upper, i));
  CHECK(std::abs(l2_inner(e, e) - l2_inner(u, u)) < 1e-12);
}

TEST_CASE("CSV round trip") {
  std::mt19937 rng(11);
  const NecklaceGrid g(1, 5);
  const auto u = random_function(g, false, rng);
  std::stringstream ss;
  write_csv(ss, u);
  const auto v = read_csv(ss, g, false);
  CHECK((u.values() - v.values()).cwiseAbs().maxCoeff() == 0.0);
  std::stringstream bad("cell,edge\n");
  CHECK_THROWS_AS(read_csv(bad, g, false), SchemaError);
}
