#include "degdiff/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include "degdiff/specfun.hpp"

namespace degdiff {
namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
// Gaussian widths (in phi coordinates, units of sqrt t) used to place
// quadrature breakpoints; 40 puts the neglected tail below exp(-800).
constexpr double kInnerWidth = 1.0;
constexpr double kMidWidth = 8.0;
constexpr double kOuterWidth = 40.0;

void require_time(double t) {
  if (!(t > 0.0) || std::isinf(t)) throw std::domain_error("kernel: time must be positive and finite");
}

void require_delta(double delta) {
  if (!(delta > 0.0 && delta <= 4.0)) throw std::domain_error("kernel: dimension must lie in (0, 4]");
}

// Integrates |f| (or f) over [a, c], first splitting at sign changes found on
// a coarse scan. The leftmost sub-piece uses the power substitution when
// `singular_left` is set.
template <class F>
double integrate_piece(F& f, double a, double c, bool singular_left, double beta, bool absolute,
                       const QuadOptions& opts, const char* what) {
  std::vector<double> cuts{a};
  if (absolute) {
    constexpr int kScan = 24;
    double prev_x = a + (c - a) * 1e-9;
    double prev_f = f(prev_x);
    for (int k = 1; k <= kScan; ++k) {
      const double xk = (k == kScan) ? c - (c - a) * 1e-9 : a + (c - a) * (static_cast<double>(k) / kScan);
      const double fk = f(xk);
      if ((prev_f < 0.0) != (fk < 0.0) && prev_f != 0.0 && fk != 0.0) {
        double lo = prev_x, hi = xk, flo = prev_f;
        for (int it = 0; it < 60; ++it) {
          const double mid = 0.5 * (lo + hi);
          const double fm = f(mid);
          if ((fm < 0.0) == (flo < 0.0)) {
            lo = mid;
            flo = fm;
          } else {
            hi = mid;
          }
        }
        cuts.push_back(0.5 * (lo + hi));
      }
      prev_x = xk;
      prev_f = fk;
    }
  }
  cuts.push_back(c);
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    auto g = [&](double y) { return absolute ? std::abs(f(y)) : f(y); };
    const auto r = (k == 0 && singular_left) ? integrate_left_power(g, cuts[k], cuts[k + 1], beta, opts)
                                             : integrate(g, cuts[k], cuts[k + 1], opts);
    total += value_or_throw(r, what);
  }
  return total;
}

// Integral over y of f(y) in the kernel's effective support, split at the
// kernel breakpoints. f must decay like the kernel at both ends.
template <class F>
double integrate_over_support(const std::vector<double>& pts, F& f, double beta, bool absolute,
                              const QuadOptions& opts, const char* what, double upper = INFINITY) {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const double a = pts[k];
    if (a >= upper) break;
    const double c = std::min(pts[k + 1], upper);
    total += integrate_piece(f, a, c, k == 0 && a == 0.0, beta, absolute, opts, what);
  }
  return total;
}

}  // namespace

KernelParams kernel_params(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw std::domain_error("kernel_params: alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
  KernelParams p{};
  p.alpha = alpha;
  p.b = 1.0 - 0.5 * alpha;
  p.nu = -0.5 / p.b;
  p.delta = 2.0 - 1.0 / p.b;
  return p;
}

double phi(const KernelParams& p, double x) { return std::pow(x, p.b) / (p.b * kSqrt2); }

double phi_inverse(const KernelParams& p, double y) { return std::pow(p.b * kSqrt2 * y, 1.0 / p.b); }

double phi_prime(const KernelParams& p, double x) { return std::pow(x, p.b - 1.0) / kSqrt2; }

double density_y(double delta, double t, double x, double y) {
  require_time(t);
  require_delta(delta);
  if (!(x >= 0.0) || !(y > 0.0)) throw std::domain_error("density_y: need x >= 0 and y > 0");
  const double nu = 0.5 * delta - 1.0;
  const double z = x * y / t;
  if (z <= kBesselSeriesLimit) {
    const double log_pre = (2.0 * nu + 1.0) * std::log(y) - (nu + 1.0) * std::log(t) - nu * std::numbers::ln2 -
                           (x * x + y * y) / (2.0 * t);
    return std::exp(log_pre) * bessel_i_reduced(nu, z);
  }
  const double d = x - y;
  const double log_pre = nu * std::log(y / x) + std::log(y / t) - d * d / (2.0 * t);
  return std::exp(log_pre) * bessel_i(nu, z, BesselScaling::scaled);
}

double density_y_dx(double delta, double t, double x, double y) {
  require_time(t);
  require_delta(delta);
  if (!(x > 0.0) || !(y > 0.0)) throw std::domain_error("density_y_dx: need x > 0 and y > 0");
  const double nu = 0.5 * delta - 1.0;
  const double z = x * y / t;
  if (z <= kBesselSeriesLimit) {
    const double log_pre = (2.0 * nu + 1.0) * std::log(y) - (nu + 1.0) * std::log(t) - nu * std::numbers::ln2 -
                           (x * x + y * y) / (2.0 * t);
    const double bracket = -(x / t) * bessel_i_reduced(nu, z) + (y / t) * (0.5 * z) * bessel_i_reduced(nu + 1.0, z);
    return std::exp(log_pre) * bracket;
  }
  const double d = x - y;
  const double log_pre = (nu + 1.0) * std::log(y) - nu * std::log(x) - std::log(t) - d * d / (2.0 * t);
  const double bracket =
      -(x / t) * bessel_i(nu, z, BesselScaling::scaled) + (y / t) * bessel_i(nu + 1.0, z, BesselScaling::scaled);
  return std::exp(log_pre) * bracket;
}

double density_z(const KernelParams& p, double t, double x, double y) {
  if (!(x >= 0.0) || !(y > 0.0)) throw std::domain_error("density_z: need x >= 0 and y > 0");
  return density_y(p.delta, t, phi(p, x), phi(p, y)) * phi_prime(p, y);
}

double density_z_dx(const KernelParams& p, double t, double x, double y) {
  if (!(x > 0.0)) throw std::domain_error("density_z_dx: x must be positive");
  if (!(y > 0.0)) throw std::domain_error("density_z_dx: y must be positive");
  return density_y_dx(p.delta, t, phi(p, x), phi(p, y)) * phi_prime(p, x) * phi_prime(p, y);
}

std::vector<double> kernel_breakpoints(const KernelParams& p, double t, double x) {
  require_time(t);
  const double v0 = phi(p, x);
  const double w = std::sqrt(t);
  const double lo = std::max(0.0, v0 - kOuterWidth * w);
  std::vector<double> v{lo};
  for (double c : {v0 - kMidWidth * w, v0 - kInnerWidth * w, v0, v0 + kInnerWidth * w, v0 + kMidWidth * w,
                   v0 + kOuterWidth * w}) {
    if (c > v.back() * (1.0 + 1e-12) && c > 0.0) v.push_back(c);
  }
  std::vector<double> y;
  y.reserve(v.size());
  for (double vk : v) y.push_back(vk == 0.0 ? 0.0 : phi_inverse(p, vk));
  return y;
}

double kernel_cdf(const KernelParams& p, double t, double x, double y_max, const QuadOptions& opts) {
  if (!(y_max > 0.0)) return 0.0;
  auto f = [&](double y) { return y > 0.0 ? density_z(p, t, x, y) : 0.0; };
  return integrate_over_support(kernel_breakpoints(p, t, x), f, -p.alpha, false, opts, "kernel_cdf", y_max);
}

double kernel_mass(const KernelParams& p, double t, double x, const QuadOptions& opts) {
  return kernel_cdf(p, t, x, std::numeric_limits<double>::infinity(), opts);
}

double kernel_mean(const KernelParams& p, double t, double x, const QuadOptions& opts) {
  auto f = [&](double y) { return y > 0.0 ? y * density_z(p, t, x, y) : 0.0; };
  return integrate_over_support(kernel_breakpoints(p, t, x), f, -p.alpha, false, opts, "kernel_mean");
}

KernelCdf::KernelCdf(const KernelParams& p, double t, double x, std::size_t cells) : alpha_(p.alpha) {
  const auto pts = kernel_breakpoints(p, t, x);
  const std::size_t pieces = pts.size() - 1;
  const std::size_t per_piece = std::max<std::size_t>(8, cells / pieces);
  const double e = 1.0 - alpha_;
  nodes_.push_back(pts.front());
  for (std::size_t k = 0; k < pieces; ++k) {
    const double wa = std::pow(pts[k], e), wb = std::pow(pts[k + 1], e);
    for (std::size_t j = 1; j <= per_piece; ++j) {
      const double w = wa + (wb - wa) * (static_cast<double>(j) / per_piece);
      nodes_.push_back(j == per_piece ? pts[k + 1] : std::pow(w, 1.0 / e));
    }
  }
  cum_.assign(nodes_.size(), 0.0);
  auto f = [&](double y) { return y > 0.0 ? density_z(p, t, x, y) : 0.0; };
  const QuadOptions opts{1e-15, 1e-10, 200};
  for (std::size_t k = 0; k + 1 < nodes_.size(); ++k) {
    const auto r = (nodes_[k] == 0.0) ? integrate_left_power(f, 0.0, nodes_[k + 1], -alpha_, opts)
                                      : integrate(f, nodes_[k], nodes_[k + 1], opts);
    cum_[k + 1] = cum_[k] + value_or_throw(r, "KernelCdf");
  }
}

double KernelCdf::operator()(double y) const {
  if (y <= nodes_.front()) return 0.0;
  if (y >= nodes_.back()) return cum_.back();
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), y);
  const std::size_t k = static_cast<std::size_t>(it - nodes_.begin()) - 1;
  const double e = 1.0 - alpha_;
  const double wa = std::pow(nodes_[k], e), wb = std::pow(nodes_[k + 1], e), w = std::pow(y, e);
  const double s = (wb > wa) ? (w - wa) / (wb - wa) : 0.0;
  return cum_[k] + s * (cum_[k + 1] - cum_[k]);
}

DerivBounds kernel_deriv_bounds(const KernelParams& p, double t, std::span<const double> grid,
                                const QuadOptions& opts) {
  require_time(t);
  DerivBounds out{0.0, 0.0, std::nan(""), std::nan("")};
  for (double x : grid) {
    if (!(x > 0.0)) throw std::domain_error("kernel_deriv_bounds: grid points must be positive");
    auto f = [&](double y) { return y > 0.0 ? density_z_dx(p, t, x, y) : 0.0; };
    double v;
    try {
      v = integrate_over_support(kernel_breakpoints(p, t, x), f, -p.alpha, true, opts, "kernel_deriv_bounds");
    } catch (const numerical_failure& e) {
      throw numerical_failure(e.what(), out.sup_dx_integral, e.error_estimate());
    }
    if (v > out.sup_dx_integral) {
      out.sup_dx_integral = v;
      out.argmax_x = x;
    }
  }
  for (double y : grid) {
    auto f = [&](double x) { return x > 0.0 ? density_z_dx(p, t, x, y) * std::pow(x, -p.alpha) : 0.0; };
    double v;
    try {
      // The kernel is symmetric in (phi(x), phi(y)) up to weights, so the
      // breakpoints for the x-integral are those of the kernel started at y.
      v = std::pow(y, p.alpha) * integrate_over_support(kernel_breakpoints(p, t, y), f, 1.0 - 2.0 * p.alpha, true,
                                                        opts, "kernel_deriv_bounds");
    } catch (const numerical_failure& e) {
      throw numerical_failure(e.what(), out.sup_weighted_dual, e.error_estimate());
    }
    if (v > out.sup_weighted_dual) {
      out.sup_weighted_dual = v;
      out.argmax_y = y;
    }
  }
  return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0 && hi > lo) || n < 2) throw std::invalid_argument("log_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> g(n);
  const double step = std::log(hi / lo) / static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k) g[k] = lo * std::exp(step * static_cast<double>(k));
  g.back() = hi;
  return g;
}

SpeedMeasure::SpeedMeasure(std::vector<double> alphas) : alphas_(std::move(alphas)) {
  for (double a : alphas_) {
    if (!(a > 0.0 && a < 1.0)) throw std::domain_error("SpeedMeasure: exponents must lie in (0, 1)");
  }
}

double SpeedMeasure::weight(std::span<const double> x) const {
  if (x.size() != alphas_.size()) throw std::invalid_argument("SpeedMeasure: dimension mismatch");
  double w = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) w *= std::pow(x[i], -alphas_[i]);
  return w;
}

double SpeedMeasure::cell_mass(double alpha, double a, double b) {
  const double e = 1.0 - alpha;
  return (std::pow(b, e) - std::pow(a, e)) / e;
}

ScaleFunction::ScaleFunction(double epsilon, double drift_bound, double alpha, double K, std::size_t nodes)
    : epsilon_(epsilon), c_(drift_bound), alpha_(alpha), K_(K) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::domain_error("ScaleFunction: alpha must lie in (0, 1)");
  if (!(epsilon >= 0.0)) throw std::domain_error("ScaleFunction: epsilon must be nonnegative");
  if (!(drift_bound >= 0.0)) throw std::domain_error("ScaleFunction: drift bound must be nonnegative");
  if (!(K > 0.0) || nodes < 2) throw std::domain_error("ScaleFunction: need K > 0 and at least two nodes");
  nodes_.resize(nodes);
  s_.assign(nodes, 0.0);
  ds_.assign(nodes, 1.0);
  for (std::size_t k = 0; k < nodes; ++k) {
    const double r = static_cast<double>(k) / static_cast<double>(nodes - 1);
    nodes_[k] = K * r * r;
  }
  for (std::size_t k = 1; k < nodes; ++k) {
    ds_[k] = derivative(nodes_[k]);
    s_[k] = s_[k - 1] + integrate_derivative(nodes_[k - 1], nodes_[k]);
  }
}

double ScaleFunction::log_derivative(double x) const {
  if (x == 0.0 || c_ == 0.0) return 0.0;
  auto f = [&](double y) { return 2.0 * c_ * std::pow(y + epsilon_, -alpha_); };
  const QuadOptions opts{1e-15, 1e-12, 500};
  const auto r = (epsilon_ == 0.0) ? integrate_left_power(f, 0.0, x, -alpha_, opts) : integrate(f, 0.0, x, opts);
  return value_or_throw(r, "ScaleFunction");
}

double ScaleFunction::integrate_derivative(double a, double b) const {
  auto f = [&](double y) { return std::exp(log_derivative(y)); };
  return value_or_throw(integrate(f, a, b, {1e-15, 1e-11, 500}), "ScaleFunction");
}

double ScaleFunction::derivative(double x) const {
  if (!(x >= 0.0 && x <= K_ * (1.0 + 1e-12))) throw std::domain_error("ScaleFunction: argument outside [0, K]");
  return std::exp(log_derivative(x));
}

double ScaleFunction::operator()(double x) const {
  if (!(x >= 0.0 && x <= K_ * (1.0 + 1e-12))) throw std::domain_error("ScaleFunction: argument outside [0, K]");
  const auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  const std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - nodes_.begin() - 1, 0));
  if (nodes_[k] == x) return s_[k];
  return s_[k] + integrate_derivative(nodes_[k], x);
}

}  // namespace degdiff
