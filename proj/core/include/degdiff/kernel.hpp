#pragma once

// Transition kernels of the reflected diffusion generated by x^alpha f'' on
// [0, inf), obtained from a Bessel process Y of dimension delta through
// Y = phi(Z) = Z^b / (b sqrt 2).

#include <cstddef>
#include <span>
#include <vector>

#include "degdiff/quadrature.hpp"

namespace degdiff {

struct KernelParams {
  double alpha;
  double b;      // 1 - alpha/2
  double nu;     // -1/(2b)
  double delta;  // 2 - 1/b = 2(nu + 1)

  /// Exponent 1/(2b) in the space-time scaling of the kernel.
  double scaling_exponent() const { return 0.5 / b; }
};

/// Throws std::domain_error unless alpha lies in (0, 1).
KernelParams kernel_params(double alpha);

double phi(const KernelParams& p, double x);
double phi_inverse(const KernelParams& p, double y);
/// phi'(x) = x^{b-1} / sqrt 2.
double phi_prime(const KernelParams& p, double x);

/// Bessel-process transition density of dimension delta in (0, 4].
/// Requires t > 0, x >= 0, y > 0; x = 0 uses the analytic limit.
double density_y(double delta, double t, double x, double y);

/// d/dx density_y(delta, t, x, y) for x > 0.
double density_y_dx(double delta, double t, double x, double y);

/// Density of Z_t given Z_0 = x, exactly normalized by construction.
double density_z(const KernelParams& p, double t, double x, double y);

/// d/dx density_z(p, t, x, y) for x > 0.
double density_z_dx(const KernelParams& p, double t, double x, double y);

/// Points (in y) that split [0, inf) into pieces adapted to the kernel from x
/// at time t. The first entry is 0 or the lower cutoff, the last is the upper
/// cutoff; mass outside [front, back] is below 1e-300.
std::vector<double> kernel_breakpoints(const KernelParams& p, double t, double x);

/// Integral of density_z(t, x, y) over y in [0, y_max].
double kernel_cdf(const KernelParams& p, double t, double x, double y_max, const QuadOptions& opts = {});

/// Total mass of density_z(t, x, .). Equal to 1 up to quadrature error.
double kernel_mass(const KernelParams& p, double t, double x, const QuadOptions& opts = {});

/// Conditional mean E[Z_t | Z_0 = x] by quadrature.
double kernel_mean(const KernelParams& p, double t, double x, const QuadOptions& opts = {});

/// Tabulated distribution function of Z_t given Z_0 = x, for goodness-of-fit
/// tests against large samples. Cell masses come from adaptive quadrature;
/// values between nodes are interpolated linearly in y^{1-alpha}.
class KernelCdf {
 public:
  KernelCdf(const KernelParams& p, double t, double x, std::size_t cells = 4096);
  double operator()(double y) const;
  double total_mass() const { return cum_.back(); }

 private:
  double alpha_;
  std::vector<double> nodes_;
  std::vector<double> cum_;
};

struct DerivBounds {
  double sup_dx_integral;     // sup_x int |d_x p(t,x,y)| dy
  double sup_weighted_dual;   // sup_y y^alpha int |d_x p(t,x,y)| x^{-alpha} dx
  double argmax_x;
  double argmax_y;
};

/// Evaluates the two derivative-kernel suprema over the given evaluation
/// points (used both as the x grid of the first and the y grid of the second).
/// Throws numerical_failure carrying the running supremum if any integral
/// misses its tolerance.
DerivBounds kernel_deriv_bounds(const KernelParams& p, double t, std::span<const double> grid,
                                const QuadOptions& opts = {1e-12, 1e-9, 4000});

/// n log-spaced points on [lo, hi].
std::vector<double> log_grid(double lo, double hi, std::size_t n);

/// Product speed measure mu(dx) = prod_i x_i^{-alpha_i} dx_i.
class SpeedMeasure {
 public:
  explicit SpeedMeasure(std::vector<double> alphas);
  double weight(std::span<const double> x) const;
  /// Exact mass of [a, b] under x^{-alpha} dx along one axis.
  static double cell_mass(double alpha, double a, double b);
  const std::vector<double>& alphas() const { return alphas_; }

 private:
  std::vector<double> alphas_;
};

/// s with s(0) = 0 and log s'(x) = int_0^x 2 c (y + eps)^{-alpha} dy on [0, K].
class ScaleFunction {
 public:
  ScaleFunction(double epsilon, double drift_bound, double alpha, double K, std::size_t nodes = 128);
  double derivative(double x) const;
  double operator()(double x) const;
  double epsilon() const { return epsilon_; }
  double drift_bound() const { return c_; }
  double upper() const { return K_; }
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& values() const { return s_; }
  const std::vector<double>& derivatives() const { return ds_; }

 private:
  double log_derivative(double x) const;
  double integrate_derivative(double a, double b) const;

  double epsilon_, c_, alpha_, K_;
  std::vector<double> nodes_, s_, ds_;
};

}  // namespace degdiff
