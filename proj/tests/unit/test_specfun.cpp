#include <doctest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "degdiff/specfun.hpp"

using degdiff::BesselScaling;
using degdiff::bessel_i;

namespace {

// Independent oracle: the defining power series summed in long double.
double series_oracle(double nu, double x, int terms = 120) {
  long double sum = 0.0L;
  long double half = 0.5L * x;
  for (int k = 0; k < terms; ++k) {
    sum += std::pow(half, 2.0L * k + nu) / (std::tgamma(static_cast<long double>(k) + 1.0L) *
                                              std::tgamma(static_cast<long double>(k) + nu + 1.0L));
  }
  return static_cast<double>(sum);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

}  // namespace

TEST_CASE("order zero at the origin is one, positive order vanishes") {
  CHECK(bessel_i(0.0, 0.0) == 1.0);
  CHECK(bessel_i(0.5, 0.0) == 0.0);
  CHECK(std::isinf(bessel_i(-0.5, 0.0)));
}

TEST_CASE("half-integer order matches the hyperbolic closed form") {
  const double expected = std::sqrt(2.0 / std::numbers::pi) * std::sinh(1.0);
  CHECK(rel(bessel_i(0.5, 1.0), expected) < 1e-14);
  CHECK(rel(series_oracle(0.5, 1.0, 30), expected) < 1e-14);
  for (double x : {0.1, 3.0, 17.0, 24.9, 25.1, 40.0, 200.0}) {
    const double c = std::sqrt(2.0 / (std::numbers::pi * x));
    CHECK(rel(bessel_i(0.5, x), c * std::sinh(x)) < 1e-12);
    CHECK(rel(bessel_i(-0.5, x), c * std::cosh(x)) < 1e-12);
  }
}

TEST_CASE("series regime agrees with the long-double series oracle") {
  for (double nu : {-0.9, -2.0 / 3.0, -0.55, -0.5, 0.0, 0.1, 1.0 / 3.0, 0.45, 1.0}) {
    for (double x : {1e-6, 0.01, 0.3, 1.0, 4.0, 10.0, 18.0, 25.0}) {
      CAPTURE(nu);
      CAPTURE(x);
      CHECK(rel(bessel_i(nu, x), series_oracle(nu, x)) < 1e-12);
    }
  }
}

TEST_CASE("both regimes agree with an external implementation") {
  for (double nu : {-0.9, -2.0 / 3.0, -0.55, 0.0, 0.3, 1.0}) {
    for (double x : {0.05, 2.0, 24.0, 26.0, 60.0, 300.0}) {
      CAPTURE(nu);
      CAPTURE(x);
      CHECK(rel(bessel_i(nu, x), boost::math::cyl_bessel_i(nu, x)) < 1e-12);
    }
  }
}

TEST_CASE("scaled variant follows the one-term asymptotic and never overflows") {
  const double v = bessel_i(-2.0 / 3.0, 50.0, BesselScaling::scaled);
  CHECK(std::isfinite(v));
  CHECK(rel(v, 1.0 / std::sqrt(2.0 * std::numbers::pi * 50.0)) < 0.02);
  for (double x : {800.0, 1e5, 1e200, 1e300}) {
    const double s = bessel_i(0.25, x, BesselScaling::scaled);
    CHECK(std::isfinite(s));
    CHECK(s > 0.0);
  }
  CHECK(std::isinf(bessel_i(0.0, 800.0)));
}

TEST_CASE("scaled values stay bounded for arguments of at least one") {
  for (double nu : {-0.9, -0.5, 0.0, 1.0}) {
    double sup = 0.0;
    for (double x = 1.0; x < 1e4; x *= 1.1) sup = std::max(sup, bessel_i(nu, x, BesselScaling::scaled));
    CHECK(sup < 1.0);
  }
}

TEST_CASE("domain errors") {
  CHECK_THROWS_AS(bessel_i(-1.0, 1.0), std::domain_error);
  CHECK_THROWS_AS(bessel_i(-1.5, 1.0), std::domain_error);
  CHECK_THROWS_AS(bessel_i(0.0, -1e-3), std::domain_error);
  CHECK_THROWS_AS(bessel_i(std::nan(""), 1.0), std::domain_error);
  CHECK_THROWS_AS(bessel_i(0.0, std::nan("")), std::domain_error);
  CHECK_THROWS_AS(degdiff::bessel_i_prime(0.0, 0.0), std::domain_error);
}

TEST_CASE("derivative of order zero is order one") {
  CHECK(rel(degdiff::bessel_i_prime(0.0, 1.0), bessel_i(1.0, 1.0)) < 1e-15);
}

TEST_CASE("upward and downward recurrence forms of the derivative coincide") {
  const double down = bessel_i(0.5, 2.0) - (0.5 / 2.0) * bessel_i(-0.5, 2.0);
  CHECK(rel(degdiff::bessel_i_prime(-0.5, 2.0), down) < 1e-12);

  for (double p : {-0.9, -2.0 / 3.0, -0.55, -0.3, 0.25, 0.7}) {
    for (double x = 0.01; x <= 100.0; x *= 1.37) {
      const double ip = bessel_i(p, x);
      const double up = degdiff::detail::bessel_i_any_order(p + 1.0, x, BesselScaling::unscaled) + (p / x) * ip;
      const double dn = degdiff::detail::bessel_i_any_order(p - 1.0, x, BesselScaling::unscaled) - (p / x) * ip;
      CAPTURE(p);
      CAPTURE(x);
      CHECK(std::abs(up - dn) / ip <= 1e-10);
    }
  }
}

TEST_CASE("derivative agrees with a central finite difference") {
  for (auto [p, x] : {std::pair{0.25, 10.0}, {-2.0 / 3.0, 0.7}, {-0.9, 3.0}, {0.0, 30.0}, {-0.55, 60.0}}) {
    const double h = x * 1e-5;
    const double fd = (bessel_i(p, x + h) - bessel_i(p, x - h)) / (2.0 * h);
    CAPTURE(p);
    CAPTURE(x);
    CHECK(rel(degdiff::bessel_i_prime(p, x), fd) < 1e-6);
  }
}

TEST_CASE("difference of adjacent orders decays like exp(x) x^{-3/2}") {
  for (double nu : {-0.9, -2.0 / 3.0, -0.55}) {
    double sup = 0.0;
    for (double x = 1.0; x <= 500.0; x *= 1.05) {
      const double d = bessel_i(nu + 1.0, x, BesselScaling::scaled) - bessel_i(nu, x, BesselScaling::scaled);
      sup = std::max(sup, std::pow(x, 1.5) * std::abs(d));
    }
    MESSAGE("nu=" << nu << " sup x^1.5 e^-x |I_{nu+1}-I_nu| = " << sup);
    CHECK(std::isfinite(sup));
    CHECK(sup < 10.0);
  }
}

TEST_CASE("increasing in the argument once past the minimum") {
  // Negative orders blow up at 0, so monotonicity starts after the first rise.
  for (double nu : {-0.9, -0.5, 0.0, 0.8}) {
    bool rising = false;
    double prev = bessel_i(nu, 0.05);
    for (double x = 0.06; x < 600.0; x *= 1.05) {
      const double cur = bessel_i(nu, x);
      if (rising) {
        CHECK(cur > prev);
      }
      rising = rising || cur > prev;
      prev = cur;
    }
    CHECK(rising);
  }
}

TEST_CASE("reduced form matches I_nu / (x/2)^nu") {
  for (double nu : {-0.9, -2.0 / 3.0, 0.0, 0.4}) {
    CHECK(rel(degdiff::bessel_i_reduced(nu, 0.0), 1.0 / std::tgamma(nu + 1.0)) < 1e-15);
    for (double x : {1e-8, 0.2, 5.0, 30.0, 120.0}) {
      CHECK(rel(degdiff::bessel_i_reduced(nu, x), bessel_i(nu, x) / std::pow(0.5 * x, nu)) < 1e-12);
    }
  }
}
