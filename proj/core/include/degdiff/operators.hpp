#pragma once

// Quadrature realizations of the semigroup, resolvent, Poisson semigroup,
// square function and second-order operator on tensor grids (d <= 2).
//
// Each axis carries a grid that is uniform in the Bessel coordinate
// v = phi(x) = x^b / (b sqrt 2), i.e. x_k = X_max (k/n)^{1/b}. Functions are
// represented by node values and interpolated by piecewise cubic Lagrange
// polynomials in v, in which semigroup outputs are smooth up to the boundary.

#include <Eigen/Dense>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "degdiff/kernel.hpp"

namespace degdiff {

class Grid1D {
 public:
  Grid1D(double alpha, std::size_t n, double x_max = 10.0);

  std::size_t size() const { return x_.size(); }  // n + 1 nodes
  std::size_t cells() const { return x_.size() - 1; }
  double alpha() const { return params_.alpha; }
  double x_max() const { return x_.back(); }
  double v_step() const { return h_; }
  const KernelParams& params() const { return params_; }
  const std::vector<double>& x() const { return x_; }
  const std::vector<double>& v() const { return v_; }
  /// Lumped speed-measure weights: integral of the v-hat function of each node
  /// against x^{-alpha} dx, in closed form.
  const std::vector<double>& weights() const { return w_; }

  /// Cubic interpolation of node values at a point in [0, x_max].
  double interpolate(std::span<const double> values, double x) const;

 private:
  KernelParams params_;
  double h_;
  std::vector<double> x_, v_, w_;
};

/// Node values on the tensor product of one or two axes. For d = 1 `values`
/// is a column; for d = 2 rows follow axis 0 and columns axis 1.
struct GridFunction {
  std::vector<std::shared_ptr<const Grid1D>> axes;
  Eigen::MatrixXd values;

  std::size_t dim() const { return axes.size(); }
  static GridFunction sample(std::vector<std::shared_ptr<const Grid1D>> axes,
                             const std::function<double(std::span<const double>)>& f);
  static GridFunction zeros_like(const GridFunction& f);
  /// Lumped L^p(mu) norm.
  double lp_norm(double p) const;
  /// Same norm restricted to nodes with every coordinate in [lo, hi].
  double lp_norm_interior(double p, double lo, double hi) const;
  double min_value() const { return values.minCoeff(); }
};

struct NormReport {
  std::string op;
  double alpha = 0.0;
  double p = 2.0;
  double parameter = 0.0;  // t, lambda or y
  double input_norm = 0.0;
  double output_norm = 0.0;
  double ratio = 0.0;
  double refinement_err = 0.0;
};

struct OperatorOptions {
  double nodes_per_decade = 10.0;
  double t_min = 1e-6;        // resolvent lower limit
  double horizon_factor = 40.0;  // resolvent upper limit horizon_factor / lambda
  double s_min = 1e-9;        // Poisson subordination range
  double s_max = 1e4;
  QuadOptions quad{1e-14, 1e-10, 400};
  /// Constant multiplier a_i per axis: the operator is sum_i a_i A_i.
  std::vector<double> multipliers;
};

/// Owns the axes and caches transition matrices M(t)_{jk} = integral of the
/// kernel from node j against the k-th basis function. Thread-safe.
class OperatorEngine {
 public:
  explicit OperatorEngine(std::vector<std::shared_ptr<const Grid1D>> axes, OperatorOptions opts = {});

  const std::vector<std::shared_ptr<const Grid1D>>& axes() const { return axes_; }
  const OperatorOptions& options() const { return opts_; }
  std::size_t dim() const { return axes_.size(); }

  /// Matrix of the kernel at time t on one axis (without multiplier).
  const Eigen::MatrixXd& transition(std::size_t axis, double t) const;

  GridFunction semigroup(double t, const GridFunction& f) const;
  GridFunction resolvent(double lambda, const GridFunction& f) const;
  GridFunction poisson(double y, const GridFunction& f) const;
  /// U_y f for several y sharing one set of semigroup applications.
  std::vector<GridFunction> poisson_family(std::span<const double> ys, const GridFunction& f) const;

  /// Square function G(f) at the nodes using U_y on a log grid of y.
  GridFunction g_function(const GridFunction& f, double y_min = 1e-3, double y_max = 50.0,
                          double y_per_decade = 12.0) const;

  /// Time nodes shared by all time quadratures.
  std::vector<double> time_nodes(double lo, double hi) const;

  std::size_t cached_matrices() const;

 private:
  Eigen::MatrixXd build_transition(const Grid1D& g, double t) const;
  double multiplier(std::size_t axis) const { return opts_.multipliers.empty() ? 1.0 : opts_.multipliers[axis]; }
  GridFunction apply_time(double t, const GridFunction& f) const;

  std::vector<std::shared_ptr<const Grid1D>> axes_;
  OperatorOptions opts_;
  mutable std::mutex mutex_;
  mutable std::map<std::pair<std::size_t, double>, std::shared_ptr<const Eigen::MatrixXd>> cache_;
};

/// Centered first difference along one axis (five-point in v, one-sided at the ends).
GridFunction derivative(const GridFunction& f, std::size_t axis);
/// A_i f = x_i^{alpha_i} d^2 f / dx_i^2 by five-point differences in the
/// Bessel coordinate, where the weight x^alpha is absorbed exactly; zero at the
/// first and last node of the axis.
GridFunction second_order(const GridFunction& f, std::size_t axis);

GridFunction semigroup_apply(const OperatorEngine& e, double t, const GridFunction& f);
GridFunction resolvent_apply(const OperatorEngine& e, double lambda, const GridFunction& f);
GridFunction poisson_apply(const OperatorEngine& e, double y, const GridFunction& f);
GridFunction g_function(const OperatorEngine& e, const GridFunction& f);

/// ||d(P_t f)/dx_axis||_p / ||f||_p. If `coarse` is given the same ratio is
/// recomputed there and the difference stored as refinement_err.
NormReport first_deriv_norm(const OperatorEngine& e, double t, double p, const GridFunction& f,
                            std::size_t axis = 0, const OperatorEngine* coarse = nullptr);
/// ||d(R_lambda f)/dx_axis||_p / ||f||_p.
NormReport resolvent_deriv_norm(const OperatorEngine& e, double lambda, double p, const GridFunction& f,
                                std::size_t axis = 0, const OperatorEngine* coarse = nullptr);
/// A_i R_lambda f together with ||A_i R_lambda f||_p / ||f||_p.
std::pair<GridFunction, NormReport> second_order_apply(const OperatorEngine& e, std::size_t axis, double lambda,
                                                       double p, const GridFunction& f,
                                                       const OperatorEngine* coarse = nullptr);
/// ||G(f)||_p / ||f||_p.
NormReport g_function_norm(const OperatorEngine& e, double p, const GridFunction& f,
                           const OperatorEngine* coarse = nullptr);

/// Subordination weight (y / (2 sqrt pi)) exp(-y^2 / 4s) s^{-3/2}.
double poisson_weight(double y, double s);

// Pointwise evaluation by adaptive quadrature, independent of any grid.

/// P_t f(x) for a function f supported in [lo, hi].
double semigroup_point(const KernelParams& p, double t, const std::function<double(double)>& f, double x,
                       double lo, double hi, const QuadOptions& opts = {1e-15, 1e-11, 2000});
/// R_lambda f(x) by a log-time trapezoid over [t_min, horizon / lambda] on
/// top of semigroup_point.
double resolvent_point(const KernelParams& p, double lambda, const std::function<double(double)>& f, double x,
                       double lo, double hi, double nodes_per_decade = 16.0, double t_min = 1e-7,
                       double horizon = 40.0);
/// (integral of |f|^p x^{-alpha} dx over [lo, hi])^{1/p}.
double lp_norm_point(double alpha, double p, const std::function<double(double)>& f, double lo, double hi,
                     const QuadOptions& opts = {1e-15, 1e-11, 2000});

/// Smooth bump exp(-1 / (1 - r^2)) on |x - center| < half_width, scaled to
/// peak 1.
double bump(double x, double center, double half_width);

}  // namespace degdiff
