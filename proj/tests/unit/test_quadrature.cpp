#include <doctest.h>

#include <array>
#include <cmath>
#include <numbers>

#include "degdiff/quadrature.hpp"

using degdiff::integrate;
using degdiff::integrate_left_power;

TEST_CASE("smooth integrands to near machine precision") {
  auto r = integrate([](double x) { return std::exp(-x * x); }, -6.0, 6.0);
  CHECK(r.converged);
  CHECK(std::abs(r.value - std::sqrt(std::numbers::pi)) < 1e-13);

  auto s = integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
  CHECK(std::abs(s.value - 2.0) < 1e-13);
}

TEST_CASE("reversed limits flip the sign") {
  auto r = integrate([](double x) { return x * x; }, 1.0, 0.0);
  CHECK(std::abs(r.value + 1.0 / 3.0) < 1e-14);
}

TEST_CASE("endpoint power singularity with and without the substitution") {
  const double beta = -0.7;
  auto f = [&](double x) { return std::pow(x, beta) * std::cos(x); };
  auto direct = integrate(f, 0.0, 1.0, {1e-12, 1e-10, 4000});
  auto subst = integrate_left_power(f, 0.0, 1.0, beta);
  // Oracle: term-by-term integration of the cosine series.
  double oracle = 0.0, term = 1.0;
  for (int k = 0; k < 20; ++k) {
    oracle += term / (2 * k + beta + 1.0);
    term *= -1.0 / ((2 * k + 1.0) * (2 * k + 2.0));
  }
  CHECK(subst.converged);
  CHECK(std::abs(subst.value - oracle) < 1e-11);
  CHECK(subst.intervals < direct.intervals);
}

TEST_CASE("vector-valued integrand shares the subdivision") {
  auto r = integrate([](double x) { return std::array<double, 3>{1.0, x, std::exp(x)}; }, 0.0, 2.0);
  CHECK(r.converged);
  CHECK(std::abs(r.value[0] - 2.0) < 1e-14);
  CHECK(std::abs(r.value[1] - 2.0) < 1e-14);
  CHECK(std::abs(r.value[2] - (std::exp(2.0) - 1.0)) < 1e-12);
}

TEST_CASE("budget exhaustion is reported and value_or_throw carries the partial result") {
  auto r = integrate([](double x) { return std::sin(1.0 / x); }, 1e-9, 1.0, {1e-15, 1e-15, 8});
  CHECK_FALSE(r.converged);
  try {
    degdiff::value_or_throw(r, "oscillatory");
    FAIL("expected numerical_failure");
  } catch (const degdiff::numerical_failure& e) {
    CHECK(e.error_estimate() > 0.0);
    CHECK(std::isfinite(e.partial()));
  }
}
