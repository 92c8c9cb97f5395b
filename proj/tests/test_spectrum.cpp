#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "necklace/errors.hpp"
#include "necklace/spectrum.hpp"

using namespace necklace;
using std::numbers::pi;

// Reference values evaluated with 30-digit arithmetic.
constexpr double kAHalf = 0.391826552030607270170855559222;
constexpr double kLambdaZeroHalf = 0.153528046876194186275294374308;
constexpr double kLambdaTwoQuarter = 4.98307188755076408423035867761;

TEST_CASE("Hill discriminant") {
  CHECK(hill_discriminant(0.0) == doctest::Approx(2.0));
  for (int m = 1; m <= 4; ++m) CHECK(hill_discriminant(m * m) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(hill_discriminant(0.25) == doctest::Approx(-2.5).epsilon(1e-14));
  CHECK_THROWS_AS(hill_discriminant(-1.0), DomainError);
}

TEST_CASE("monodromy trace matches the discriminant and det M = 1") {
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> d(0.0, 25.0);
  double worst_trace = 0.0, worst_det = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double lambda = d(rng);
    const auto M = monodromy_matrix(lambda);
    worst_trace = std::max(worst_trace, std::abs(M.trace() - hill_discriminant(lambda)));
    worst_det = std::max(worst_det, std::abs(M.determinant() - 1.0));
  }
  CHECK(worst_trace <= 1e-10);
  CHECK(worst_det <= 1e-12);
  CHECK(monodromy_matrix(0.0).trace() == doctest::Approx(2.0));
  // series branch near s = 0
  CHECK(std::abs(monodromy_matrix(1e-12).trace() - hill_discriminant(1e-12)) < 1e-12);
}

TEST_CASE("closed-form bands") {
  for (int m = -3; m <= 3; ++m) CHECK(std::abs(band_closed_form(m, 0.0).lambda - m * m) < 1e-12);
  CHECK(std::abs(a_half() - kAHalf) < 1e-15);
  CHECK(std::abs(band_closed_form(0, 0.5).lambda - kLambdaZeroHalf) < 1e-14);
  for (int m = -4; m <= 4; ++m) CHECK(std::abs(band_closed_form(m, 0.5).lambda - band_at_half(m)) < 1e-12);
  CHECK(std::abs(band_closed_form(2, 0.25).lambda - kLambdaTwoQuarter) < 1e-13);
}

TEST_CASE("monodromy root finding reproduces the closed form") {
  double worst = 0.0;
  for (int m = -3; m <= 3; ++m)
    for (int i = 0; i < 129; ++i) {
      const double l = -0.5 + i / 128.0;
      worst = std::max(worst, std::abs(band_from_monodromy(m, l).lambda - band_closed_form(m, l).lambda));
    }
  CHECK(worst <= 1e-8);
  for (int m = -3; m <= 3; ++m) CHECK(band_from_monodromy(m, 0.0).lambda == doctest::Approx(m * m));
  CHECK(std::abs(band_from_monodromy(2, 0.25).lambda - kLambdaTwoQuarter) < 1e-10);
  CHECK(max_band_discrepancy(-3, 3, 257) <= 1e-8);
}

TEST_CASE("bands are ordered and gaps sit around half-integers") {
  for (int i = 0; i <= 64; ++i) {
    const double l = i / 128.0;
    const double a = a_of_l(l);
    CHECK(a >= 0.0);
    CHECK(a <= kAHalf + 1e-15);
    for (int m = 0; m < 6; ++m) {
      // sqrt(lambda) of band m >= 0 is m + a, of band -(m+1) is m + 1 - a
      CHECK(std::sqrt(band_closed_form(m, l).lambda) < std::sqrt(band_closed_form(-(m + 1), l).lambda) + 1e-12);
      CHECK(std::sqrt(band_closed_form(m, l).lambda) < m + 0.5);
      CHECK(std::sqrt(band_closed_form(-(m + 1), l).lambda) > m + 0.5);
    }
  }
}

TEST_CASE("|tr M| <= 2 exactly on the band set") {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> d(0.0, 30.0);
  for (int i = 0; i < 2000; ++i) {
    const double lambda = d(rng);
    const double s = std::sqrt(lambda);
    const double dist = std::abs(s - std::round(s));  // distance to the nearest touching point
    if (std::abs(dist - kAHalf) < 1e-9) continue;
    const bool in_band = dist <= kAHalf;
    CHECK((std::abs(hill_discriminant(lambda)) <= 2.0) == in_band);
  }
}

TEST_CASE("Bloch eigenfunctions") {
  const double bound = 12.0 / std::sqrt(pi);
  SUBCASE("defining conditions, bound and phase") {
    for (int m = -5; m <= 5; ++m)
      for (int i = 0; i <= 32; ++i) {
        const double l = -0.5 + (i + 0.5) / 33.0 * 1.0;
        const auto f = bloch_eigenfunction(m, l);
        CHECK(eigenfunction_condition_residual(f) <= 1e-10);
        CHECK(f.sup_norm() <= bound);
        CHECK(std::abs(per_inner(f, f) - 1.0) <= 1e-10);
        if (f.phase == BlochEigenfunction::Phase::value_real_nonnegative) {
          CHECK(f.value(true, 0.0).real() >= 0.0);
          CHECK(std::abs(f.value(true, 0.0).imag()) < 1e-14);
        }
      }
  }
  SUBCASE("orthonormality at fixed l") {
    for (double l : {0.5, 0.25, -0.3, 0.01, 0.0}) {
      double worst = 0.0;
      for (int m = -5; m <= 5; ++m)
        for (int n = -5; n <= 5; ++n) {
          const auto v = per_inner(bloch_eigenfunction(m, l), bloch_eigenfunction(n, l));
          worst = std::max(worst, std::abs(v - (m == n ? 1.0 : 0.0)));
        }
      CHECK(worst <= 1e-10);
    }
  }
  SUBCASE("constant and cosine modes at l = 0") {
    const auto c0 = bloch_eigenfunction(0, 0.0);
    CHECK(c0.value(true, 1.0).real() == doctest::Approx(1.0 / std::sqrt(3.0 * pi)));
    CHECK(c0.value(false, 4.0).real() == doctest::Approx(1.0 / std::sqrt(3.0 * pi)));
    // cos(m x) on the three edges has squared norm 3 pi / 2
    const double c = 1.0 / std::sqrt(1.5 * pi);
    for (int m = 1; m <= 3; ++m) {
      const auto f = bloch_eigenfunction(m, 0.0);
      CHECK(f.phase == BlochEigenfunction::Phase::degenerate_cosine);
      for (double x : {0.3, 1.1, 2.9}) {
        CHECK(std::abs(f.value(true, x) - c * std::cos(m * x)) < 1e-12);
        CHECK(std::abs(f.value(false, x + pi) - c * std::cos(m * (x + pi))) < 1e-12);
      }
      const auto s = bloch_eigenfunction(-m, 0.0);
      CHECK(s.phase == BlochEigenfunction::Phase::degenerate_sine);
      CHECK(std::abs(s.value(true, 0.4) / s.value(false, 0.4 + pi) -
                     2.0 * std::sin(m * 0.4) / std::sin(m * (0.4 + pi))) < 1e-10);
      CHECK(bloch_eigenspace(m, 0.0).size() == 2);
    }
    CHECK(bloch_eigenspace(2, 0.3).size() == 1);
  }
  SUBCASE("gap edge at l = 1/2 is a single Jordan eigenvector") {
    for (int m = -3; m <= 3; ++m) {
      const auto f = bloch_eigenfunction(m, 0.5);
      CHECK(std::abs(f.lambda - band_at_half(m)) < 1e-12);
      CHECK(eigenfunction_condition_residual(f) <= 1e-10);
    }
  }
}

TEST_CASE("bands CSV") {
  std::stringstream ss;
  write_bands_csv(ss, -1, 1, 5, true);
  std::string line;
  std::getline(ss, line);
  CHECK(line == "m,l,lambda,a_of_l,trM_of_lambda,lambda_monodromy,discrepancy");
  int rows = 0;
  while (std::getline(ss, line)) ++rows;
  CHECK(rows == 15);
  std::stringstream sink;
  CHECK_THROWS_AS(write_bands_csv(sink, 2, 1, 5, false), DomainError);
}
