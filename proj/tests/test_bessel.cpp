// Exponentially scaled modified Bessel values against an independent
// quadrature oracle of the integral definition, classical identities
// (generating-function mass, three-term recurrence, symmetry), and the
// lattice-periodized row.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "stpde/bessel.hpp"

using stpde::scaled_bessel_i;
using stpde::scaled_bessel_i_row;
using stpde::scaled_bessel_i_row_periodic;

namespace {

// Composite-Simpson evaluation of (1/pi) int_0^pi e^{r (cos z - 1)} cos(n z) dz.
// The integrand is entire and periodic-smooth; panel counts used here push the
// rule's error far below 1e-13 for r <= 200, |n| <= 60.
double quadrature_oracle(long n, double r, int panels) {
  const double a = 0.0;
  const double b = 3.14159265358979323846;
  const double h = (b - a) / panels;
  auto f = [&](double z) {
    return std::exp(r * (std::cos(z) - 1.0)) *
           std::cos(static_cast<double>(n) * z);
  };
  double s = f(a) + f(b);
  for (int k = 1; k < panels; ++k)
    s += (k % 2 == 1 ? 4.0 : 2.0) * f(a + k * h);
  return s * h / 3.0 / b;
}

}  // namespace

TEST_CASE("order-zero and high-order values at r = 0") {
  CHECK(scaled_bessel_i(0, 0.0) == 1.0);
  CHECK(scaled_bessel_i(3, 0.0) == 0.0);
  CHECK(scaled_bessel_i(-3, 0.0) == 0.0);
  CHECK(scaled_bessel_i(1, 0.0) == 0.0);
}

TEST_CASE("integral-definition quadrature oracle") {
  // Oracle self-check: two panel counts agree to well below the comparison
  // tolerance, so the oracle itself is converged.
  const double o1 = quadrature_oracle(1, 2.0, 4000);
  const double o2 = quadrature_oracle(1, 2.0, 8000);
  REQUIRE(std::abs(o1 - o2) < 1e-14);
  CHECK(std::abs(scaled_bessel_i(1, 2.0) - o2) <= 1e-10);

  const long ns[] = {0, 1, 5, 17, 42};
  const double rs[] = {0.3, 2.0, 11.0, 47.5, 150.0};
  for (long n : ns)
    for (double r : rs) {
      const double q = quadrature_oracle(n, r, 20000);
      const double v = scaled_bessel_i(n, r);
      CHECK(std::abs(v - q) <= 1e-12);
    }
}

TEST_CASE("generating-function mass: I_0 + 2 sum I_n = e^r") {
  for (double r : {0.5, 3.0, 47.0, 1.0e3, 1.0e5}) {
    const long nmax = static_cast<long>(8.0 * std::sqrt(r) + 40.0);
    const std::vector<double> row = scaled_bessel_i_row(nmax, r);
    double mass = row[0];
    for (long n = nmax; n >= 1; --n) mass += 2.0 * row[static_cast<std::size_t>(n)];
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("three-term recurrence and order symmetry") {
  for (double r : {0.7, 5.0, 80.0, 2.0e3}) {
    for (long n : {1L, 2L, 7L, 19L}) {
      const double lhs = scaled_bessel_i(n - 1, r) - scaled_bessel_i(n + 1, r);
      const double rhs =
          (2.0 * static_cast<double>(n) / r) * scaled_bessel_i(n, r);
      const double scale = std::max(std::abs(scaled_bessel_i(n - 1, r)), 1e-300);
      CHECK(std::abs(lhs - rhs) <= 1e-11 * scale);
    }
  }
  for (double r : {0.0, 1.5, 33.0})
    for (long n : {1L, 4L, 9L})
      CHECK(scaled_bessel_i(-n, r) == scaled_bessel_i(n, r));
}

TEST_CASE("row evaluation is consistent with the scalar entry point") {
  for (double r : {0.2, 6.0, 400.0}) {
    const long nmax = 30;
    const std::vector<double> row = scaled_bessel_i_row(nmax, r);
    REQUIRE(row.size() == static_cast<std::size_t>(nmax + 1));
    for (long n = 0; n <= nmax; ++n) {
      const double s = scaled_bessel_i(n, r);
      const double scale = std::max(std::abs(s), 1e-300);
      CHECK(std::abs(row[static_cast<std::size_t>(n)] - s) <= 1e-12 * scale);
    }
    // Strict decay in the order at fixed argument (until underflow).
    for (long n = 0; n < nmax; ++n) {
      const std::size_t i = static_cast<std::size_t>(n);
      if (row[i + 1] > 0.0) CHECK(row[i] > row[i + 1]);
    }
  }
}

TEST_CASE("periodized row equals the brute-force image sum") {
  struct Case {
    double r;
    long period;
  };
  for (const Case c : {Case{7.3, 11}, Case{100.0, 7}, Case{0.9, 5}}) {
    const std::vector<double> folded =
        scaled_bessel_i_row_periodic(c.r, c.period, c.period);
    REQUIRE(folded.size() == static_cast<std::size_t>(c.period));
    const long reach = static_cast<long>(12.0 * std::sqrt(c.r) + 8.0 * c.period);
    for (long q = 0; q < c.period; ++q) {
      double brute = 0.0;
      for (long m = -reach; m <= reach; ++m)
        brute += scaled_bessel_i(std::labs(q + m * c.period), c.r);
      const double v = folded[static_cast<std::size_t>(q)];
      CHECK(std::abs(v - brute) <= 1e-12 * std::max(brute, 1e-300));
    }
  }
}

TEST_CASE("argument validation and underflow behavior") {
  CHECK_THROWS_AS(scaled_bessel_i(0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(scaled_bessel_i_row(10, -0.5), std::invalid_argument);
  // Deep in the order tail the scaled value undershoots double range: 0.
  CHECK(scaled_bessel_i(100000, 1.0) == 0.0);
}
