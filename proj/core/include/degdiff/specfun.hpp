#pragma once

// Modified Bessel functions of the first kind for real order and
// nonnegative argument.

namespace degdiff {

enum class BesselScaling {
  unscaled,  // I_nu(x)
  scaled,    // exp(-x) I_nu(x); never overflows
};

/// I_nu(x) for order > -1 and x >= 0.
///
/// Power series for x <= 25, Hankel large-argument expansion (computed in
/// scaled form) beyond. Accuracy is about 1e-13 relative for |order| <= 2.
/// At x = 0 the value is 1 for order 0, 0 for positive order and +inf for
/// negative order.
///
/// Throws std::domain_error for order <= -1, x < 0 or NaN input.
double bessel_i(double order, double x, BesselScaling scaling = BesselScaling::unscaled);

/// dI_nu/dx from I'_p = I_{p+1} + (p/x) I_p. Requires x > 0, order > -1.
double bessel_i_prime(double order, double x);

/// I_nu(x) / (x/2)^nu, an entire function of x with value 1/Gamma(nu+1) at 0.
/// Used by the transition kernels when xy/t is small, where forming
/// (y/x)^nu I_nu(xy/t) directly loses accuracy.
double bessel_i_reduced(double order, double x);

/// Argument above which bessel_i switches from the series to the asymptotic
/// expansion.
inline constexpr double kBesselSeriesLimit = 25.0;

namespace detail {

// Same algorithms with no order validation. Valid for any real order that is
// not a negative integer; used to check the downward recurrence, which needs
// I_{p-1} with p - 1 < -1.
double bessel_i_any_order(double order, double x, BesselScaling scaling);

}  // namespace detail
}  // namespace degdiff
