#include "degdiff/specfun.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace degdiff {
namespace {

constexpr int kMaxSeriesTerms = 80;
constexpr int kMaxHankelTerms = 40;
constexpr double kSeriesStop = 1e-17;

// sum_k (x^2/4)^k / (k! Gamma(k + nu + 1))
double reduced_series(double nu, double x) {
  const double q = 0.25 * x * x;
  double term = 1.0 / std::tgamma(nu + 1.0);
  double sum = term;
  for (int k = 1; k < kMaxSeriesTerms; ++k) {
    term *= q / (k * (k + nu));
    sum += term;
    if (k + nu > 0.0 && std::abs(term) <= kSeriesStop * std::abs(sum)) break;
  }
  return sum;
}

// exp(-x) I_nu(x) ~ (2 pi x)^{-1/2} sum_k (-1)^k a_k(nu) / x^k
double hankel_scaled(double nu, double x) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0;
  double sum = 1.0;
  for (int k = 1; k < kMaxHankelTerms; ++k) {
    const double odd = 2.0 * k - 1.0;
    const double next = -term * (mu - odd * odd) / (8.0 * k * x);
    if (k >= 6 && std::abs(next) > std::abs(term)) break;  // asymptotic series started to diverge
    term = next;
    sum += term;
    if (k >= 6 && std::abs(term) <= kSeriesStop * std::abs(sum)) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * x);
}

void check_argument(double x) {
  if (std::isnan(x) || x < 0.0) {
    throw std::domain_error("bessel_i: argument must be a nonnegative number, got " + std::to_string(x));
  }
}

void check_order(double order) {
  if (std::isnan(order) || order <= -1.0) {
    throw std::domain_error("bessel_i: order must exceed -1, got " + std::to_string(order));
  }
}

}  // namespace

namespace detail {

double bessel_i_any_order(double order, double x, BesselScaling scaling) {
  if (x == 0.0) {
    if (order == 0.0) return 1.0;
    if (order > 0.0) return 0.0;
    return std::numeric_limits<double>::infinity();
  }
  if (std::isinf(x)) {
    return scaling == BesselScaling::scaled ? 0.0 : std::numeric_limits<double>::infinity();
  }
  if (x <= kBesselSeriesLimit) {
    const double value = std::pow(0.5 * x, order) * reduced_series(order, x);
    return scaling == BesselScaling::scaled ? value * std::exp(-x) : value;
  }
  const double scaled = hankel_scaled(order, x);
  return scaling == BesselScaling::scaled ? scaled : scaled * std::exp(x);
}

}  // namespace detail

double bessel_i(double order, double x, BesselScaling scaling) {
  check_order(order);
  check_argument(x);
  return detail::bessel_i_any_order(order, x, scaling);
}

double bessel_i_prime(double order, double x) {
  check_order(order);
  check_argument(x);
  if (x == 0.0) {
    throw std::domain_error("bessel_i_prime: derivative is not defined at x = 0");
  }
  return detail::bessel_i_any_order(order + 1.0, x, BesselScaling::unscaled) +
         (order / x) * detail::bessel_i_any_order(order, x, BesselScaling::unscaled);
}

double bessel_i_reduced(double order, double x) {
  check_order(order);
  check_argument(x);
  if (x <= kBesselSeriesLimit) return reduced_series(order, x);
  return hankel_scaled(order, x) * std::exp(x) * std::pow(0.5 * x, -order);
}

}  // namespace degdiff
