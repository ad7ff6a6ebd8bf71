#include "degdiff/operators.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "degdiff/parallel.hpp"

namespace degdiff {

namespace {

// Cubic Lagrange basis on the stencil {0, 1, 2, 3} in local units.
std::array<double, 4> lagrange4(double xi) {
  const double a = xi, b = xi - 1.0, c = xi - 2.0, d = xi - 3.0;
  return {-b * c * d / 6.0, a * c * d / 2.0, -a * b * d / 2.0, a * b * c / 6.0};
}

std::size_t stencil_start(std::size_t cell, std::size_t cells) {
  if (cell == 0) return 0;
  return std::min(cell - 1, cells - 3);
}

void require_same_axes(const GridFunction& f, const OperatorEngine& e) {
  if (f.axes.size() != e.axes().size()) throw std::invalid_argument("grid function dimension does not match engine");
  for (std::size_t i = 0; i < f.axes.size(); ++i) {
    if (f.axes[i].get() != e.axes()[i].get()) {
      throw std::invalid_argument("grid function lives on different axes than the engine");
    }
  }
}

// Interpolates f onto other axes; zero outside the source grid.
GridFunction resample(const GridFunction& f, const std::vector<std::shared_ptr<const Grid1D>>& axes) {
  if (f.dim() == 1) {
    const auto& src = *f.axes[0];
    std::span<const double> vals(f.values.data(), static_cast<std::size_t>(f.values.rows()));
    return GridFunction::sample(axes, [&](std::span<const double> x) {
      return x[0] <= src.x_max() ? src.interpolate(vals, x[0]) : 0.0;
    });
  }
  GridFunction out;
  out.axes = axes;
  const auto& s0 = *f.axes[0];
  const auto& s1 = *f.axes[1];
  // Interpolate along axis 1 first, then axis 0.
  Eigen::MatrixXd mid(f.values.rows(), static_cast<Eigen::Index>(axes[1]->size()));
  std::vector<double> row(static_cast<std::size_t>(f.values.cols()));
  for (Eigen::Index i = 0; i < f.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < f.values.cols(); ++j) row[static_cast<std::size_t>(j)] = f.values(i, j);
    for (std::size_t j = 0; j < axes[1]->size(); ++j) {
      const double y = axes[1]->x()[j];
      mid(i, static_cast<Eigen::Index>(j)) = y <= s1.x_max() ? s1.interpolate(row, y) : 0.0;
    }
  }
  out.values.resize(static_cast<Eigen::Index>(axes[0]->size()), mid.cols());
  std::vector<double> col(static_cast<std::size_t>(mid.rows()));
  for (Eigen::Index j = 0; j < mid.cols(); ++j) {
    for (Eigen::Index i = 0; i < mid.rows(); ++i) col[static_cast<std::size_t>(i)] = mid(i, j);
    for (std::size_t i = 0; i < axes[0]->size(); ++i) {
      const double x = axes[0]->x()[i];
      out.values(static_cast<Eigen::Index>(i), j) = x <= s0.x_max() ? s0.interpolate(col, x) : 0.0;
    }
  }
  return out;
}

std::vector<std::shared_ptr<const Grid1D>> axes_of(const OperatorEngine& e) { return e.axes(); }

NormReport make_report(std::string op, const GridFunction& f, double p, double parameter, double out_norm) {
  NormReport r;
  r.op = std::move(op);
  r.alpha = f.axes[0]->alpha();
  r.p = p;
  r.parameter = parameter;
  r.input_norm = f.lp_norm(p);
  r.output_norm = out_norm;
  r.ratio = r.input_norm > 0.0 ? out_norm / r.input_norm : 0.0;
  return r;
}

}  // namespace

// ---------------------------------------------------------------- Grid1D

Grid1D::Grid1D(double alpha, std::size_t n, double x_max) : params_(kernel_params(alpha)) {
  if (n < 4) throw std::invalid_argument("Grid1D: need at least 4 cells");
  if (!(x_max > 0.0)) throw std::invalid_argument("Grid1D: x_max must be positive");
  const double v_max = phi(params_, x_max);
  h_ = v_max / static_cast<double>(n);
  x_.resize(n + 1);
  v_.resize(n + 1);
  for (std::size_t k = 0; k <= n; ++k) {
    v_[k] = h_ * static_cast<double>(k);
    x_[k] = k == 0 ? 0.0 : phi_inverse(params_, v_[k]);
  }
  x_[n] = x_max;
  v_[n] = v_max;

  // mu([0, x(v)]) = C v^delta / (1 - alpha) and its antiderivative in v.
  const double delta = params_.delta;
  const double c = std::pow(params_.b * std::numbers::sqrt2, delta) / (1.0 - alpha);
  auto mass = [&](double v) { return c * std::pow(v, delta); };
  auto anti = [&](double v) { return c * std::pow(v, delta + 1.0) / (delta + 1.0); };
  w_.assign(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    // Cell [v_k, v_{k+1}]: rising hat of node k+1 and falling hat of node k.
    const double a = v_[k], b = v_[k + 1];
    const double rise = mass(b) - (anti(b) - anti(a)) / h_;
    const double fall = -mass(a) + (anti(b) - anti(a)) / h_;
    w_[k + 1] += rise;
    w_[k] += fall;
  }
}

double Grid1D::interpolate(std::span<const double> values, double x) const {
  if (values.size() != x_.size()) throw std::invalid_argument("Grid1D::interpolate: size mismatch");
  if (x < 0.0 || x > x_max() * (1.0 + 1e-12)) throw std::domain_error("Grid1D::interpolate: point outside the grid");
  const double v = phi(params_, x);
  const std::size_t n = cells();
  const std::size_t cell = std::min(static_cast<std::size_t>(v / h_), n - 1);
  const std::size_t s = stencil_start(cell, n);
  const auto l = lagrange4((v - v_[s]) / h_);
  return l[0] * values[s] + l[1] * values[s + 1] + l[2] * values[s + 2] + l[3] * values[s + 3];
}

// ---------------------------------------------------------- GridFunction

GridFunction GridFunction::sample(std::vector<std::shared_ptr<const Grid1D>> axes,
                                  const std::function<double(std::span<const double>)>& f) {
  if (axes.empty() || axes.size() > 2) throw std::invalid_argument("GridFunction: dimension must be 1 or 2");
  GridFunction g;
  g.axes = std::move(axes);
  const auto& a0 = *g.axes[0];
  if (g.axes.size() == 1) {
    g.values.resize(static_cast<Eigen::Index>(a0.size()), 1);
    for (std::size_t i = 0; i < a0.size(); ++i) {
      const double x[1] = {a0.x()[i]};
      g.values(static_cast<Eigen::Index>(i), 0) = f(x);
    }
    return g;
  }
  const auto& a1 = *g.axes[1];
  g.values.resize(static_cast<Eigen::Index>(a0.size()), static_cast<Eigen::Index>(a1.size()));
  for (std::size_t i = 0; i < a0.size(); ++i) {
    for (std::size_t j = 0; j < a1.size(); ++j) {
      const double x[2] = {a0.x()[i], a1.x()[j]};
      g.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = f(x);
    }
  }
  return g;
}

GridFunction GridFunction::zeros_like(const GridFunction& f) {
  GridFunction g;
  g.axes = f.axes;
  g.values = Eigen::MatrixXd::Zero(f.values.rows(), f.values.cols());
  return g;
}

double GridFunction::lp_norm(double p) const {
  return lp_norm_interior(p, 0.0, std::numeric_limits<double>::infinity());
}

double GridFunction::lp_norm_interior(double p, double lo, double hi) const {
  if (!(p >= 1.0) || !std::isfinite(p)) throw std::domain_error("lp_norm: p must lie in [1, inf)");
  const auto& a0 = *axes[0];
  double s = 0.0;
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    const double x = a0.x()[static_cast<std::size_t>(i)];
    if (x < lo || x > hi) continue;
    const double w0 = a0.weights()[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      double w = w0;
      if (axes.size() == 2) {
        const double y = axes[1]->x()[static_cast<std::size_t>(j)];
        if (y < lo || y > hi) continue;
        w *= axes[1]->weights()[static_cast<std::size_t>(j)];
      }
      s += std::pow(std::abs(values(i, j)), p) * w;
    }
  }
  return std::pow(s, 1.0 / p);
}

// -------------------------------------------------------- OperatorEngine

OperatorEngine::OperatorEngine(std::vector<std::shared_ptr<const Grid1D>> axes, OperatorOptions opts)
    : axes_(std::move(axes)), opts_(std::move(opts)) {
  if (axes_.empty() || axes_.size() > 2) throw std::invalid_argument("OperatorEngine: dimension must be 1 or 2");
  if (!opts_.multipliers.empty()) {
    if (opts_.multipliers.size() != axes_.size()) throw std::invalid_argument("OperatorEngine: one multiplier per axis");
    for (double a : opts_.multipliers) {
      if (!(a > 0.0)) throw std::invalid_argument("OperatorEngine: multipliers must be positive");
    }
  }
  if (!(opts_.nodes_per_decade >= 2.0)) throw std::invalid_argument("OperatorEngine: nodes_per_decade too small");
}

std::vector<double> OperatorEngine::time_nodes(double lo, double hi) const {
  const double m = opts_.nodes_per_decade;
  const long k0 = static_cast<long>(std::floor(m * std::log10(lo) + 1e-9));
  const long k1 = static_cast<long>(std::ceil(m * std::log10(hi) - 1e-9));
  std::vector<double> t;
  for (long k = k0; k <= k1; ++k) t.push_back(std::pow(10.0, static_cast<double>(k) / m));
  return t;
}

std::size_t OperatorEngine::cached_matrices() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

Eigen::MatrixXd OperatorEngine::build_transition(const Grid1D& g, double t) const {
  if (!(t > 0.0) || !std::isfinite(t)) throw std::domain_error("transition: t must be positive and finite");
  const std::size_t N = g.size(), n = g.cells();
  const double h = g.v_step(), delta = g.params().delta;
  const double reach = 40.0 * std::sqrt(t);
  const auto& v = g.v();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> M =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(
          static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(N));
  parallel_for(N, [&](std::size_t j) {
    const double u = v[j];
    const double lo = std::max(0.0, std::floor((u - reach) / h));
    const std::size_t c0 = static_cast<std::size_t>(lo);
    const std::size_t c1 = std::min(n - 1, static_cast<std::size_t>(std::floor((u + reach) / h)));
    for (std::size_t c = c0; c <= c1; ++c) {
      const std::size_t s = stencil_start(c, n);
      const double vs = v[s];
      auto integrand = [&](double y) {
        const double pv = density_y(delta, t, u, y);
        auto l = lagrange4((y - vs) / h);
        for (double& e : l) e *= pv;
        return l;
      };
      const auto r = c == 0 ? integrate_left_power(integrand, 0.0, v[1], delta - 1.0, opts_.quad)
                            : integrate(integrand, v[c], v[c + 1], opts_.quad);
      const auto val = value_or_throw(r, "transition matrix");
      for (std::size_t m = 0; m < 4; ++m) {
        M(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(s + m)) += val[m];
      }
    }
  });
  return M;
}

const Eigen::MatrixXd& OperatorEngine::transition(std::size_t axis, double t) const {
  const auto key = std::make_pair(axis, t);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(key); it != cache_.end()) return *it->second;
  }
  auto m = std::make_shared<const Eigen::MatrixXd>(build_transition(*axes_.at(axis), t));
  std::lock_guard lock(mutex_);
  auto [it, inserted] = cache_.emplace(key, std::move(m));
  return *it->second;
}

GridFunction OperatorEngine::apply_time(double t, const GridFunction& f) const {
  require_same_axes(f, *this);
  GridFunction out;
  out.axes = f.axes;
  const auto& m0 = transition(0, multiplier(0) * t);
  if (dim() == 1) {
    out.values = m0 * f.values;
  } else {
    const auto& m1 = transition(1, multiplier(1) * t);
    out.values = m0 * f.values * m1.transpose();
  }
  return out;
}

GridFunction OperatorEngine::semigroup(double t, const GridFunction& f) const { return apply_time(t, f); }

GridFunction OperatorEngine::resolvent(double lambda, const GridFunction& f) const {
  if (!(lambda > 0.0)) throw std::domain_error("resolvent: lambda must be positive");
  const auto ts = time_nodes(opts_.t_min, opts_.horizon_factor / lambda);
  const double h = std::log(10.0) / opts_.nodes_per_decade;
  GridFunction out;
  out.axes = f.axes;
  // Head [0, t_0]: P_t f = f + O(t).
  out.values = ts.front() * f.values;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double end = (k == 0 || k + 1 == ts.size()) ? 0.5 : 1.0;
    const double w = end * h * ts[k] * std::exp(-lambda * ts[k]);
    out.values += w * apply_time(ts[k], f).values;
  }
  return out;
}

double poisson_weight(double y, double s) {
  if (!(s > 0.0)) return 0.0;
  return y / (2.0 * std::sqrt(std::numbers::pi)) * std::exp(-y * y / (4.0 * s)) * std::pow(s, -1.5);
}

std::vector<GridFunction> OperatorEngine::poisson_family(std::span<const double> ys, const GridFunction& f) const {
  for (double y : ys) {
    if (!(y > 0.0)) throw std::domain_error("poisson: y must be positive");
  }
  const auto ss = time_nodes(opts_.s_min, opts_.s_max);
  const double h = std::log(10.0) / opts_.nodes_per_decade;
  std::vector<Eigen::MatrixXd> ps;
  ps.reserve(ss.size());
  for (double s : ss) ps.push_back(apply_time(s, f).values);

  // Decay exponent of P_s f for large s: sum over axes of (1 - alpha) / (2b).
  double kappa = 0.0;
  for (const auto& a : axes_) kappa += (1.0 - a->alpha()) / (2.0 * a->params().b);
  const double S = ss.back();

  std::vector<GridFunction> out;
  out.reserve(ys.size());
  for (double y : ys) {
    GridFunction u;
    u.axes = f.axes;
    u.values = std::erfc(y / (2.0 * std::sqrt(ss.front()))) * f.values;
    for (std::size_t k = 0; k < ss.size(); ++k) {
      const double end = (k == 0 || k + 1 == ss.size()) ? 0.5 : 1.0;
      u.values += (end * h * ss[k] * poisson_weight(y, ss[k])) * ps[k];
    }
    // Tail beyond S with P_s f ~ (S/s)^kappa P_S f.
    const double z = y * y / (4.0 * S);
    const double tail = std::pow(S, kappa) / std::sqrt(std::numbers::pi) * std::pow(2.0 / y, 2.0 * kappa) *
                        boost::math::tgamma_lower(kappa + 0.5, z);
    u.values += tail * ps.back();
    out.push_back(std::move(u));
  }
  return out;
}

GridFunction OperatorEngine::poisson(double y, const GridFunction& f) const {
  const double ys[1] = {y};
  return std::move(poisson_family(ys, f).front());
}

GridFunction OperatorEngine::g_function(const GridFunction& f, double y_min, double y_max,
                                        double y_per_decade) const {
  const auto n_y = static_cast<std::size_t>(std::ceil(y_per_decade * std::log10(y_max / y_min))) + 1;
  const auto ys = log_grid(y_min, y_max, n_y);
  const auto us = poisson_family(ys, f);
  const Eigen::Index rows = f.values.rows(), cols = f.values.cols();

  // Integrand y (|d_y U|^2 + sum_i x_i^alpha |d_i U|^2) at every y node.
  std::vector<Eigen::ArrayXXd> integrand(n_y);
  for (std::size_t k = 0; k < n_y; ++k) {
    Eigen::ArrayXXd dy;
    if (k == 0) {
      dy = (us[1].values - us[0].values).array() / (ys[1] - ys[0]);
    } else if (k + 1 == n_y) {
      dy = (us[k].values - us[k - 1].values).array() / (ys[k] - ys[k - 1]);
    } else {
      const double hm = ys[k] - ys[k - 1], hp = ys[k + 1] - ys[k];
      dy = (hm * hm * (us[k + 1].values - us[k].values).array() + hp * hp * (us[k].values - us[k - 1].values).array()) /
           (hm * hp * (hm + hp));
    }
    Eigen::ArrayXXd acc = dy.square();
    for (std::size_t axis = 0; axis < dim(); ++axis) {
      const GridFunction dfx = derivative(us[k], axis);
      const auto dx = dfx.values.array();
      Eigen::ArrayXXd wx(rows, cols);
      const auto& xs = axes_[axis]->x();
      const double al = axes_[axis]->alpha();
      for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
          const double x = xs[static_cast<std::size_t>(axis == 0 ? i : j)];
          wx(i, j) = std::pow(x, al);
        }
      }
      acc += wx * dx.square();
    }
    integrand[k] = ys[k] * acc;
  }
  GridFunction g;
  g.axes = f.axes;
  Eigen::ArrayXXd total = Eigen::ArrayXXd::Zero(rows, cols);
  for (std::size_t k = 0; k + 1 < n_y; ++k) total += 0.5 * (ys[k + 1] - ys[k]) * (integrand[k] + integrand[k + 1]);
  g.values = total.sqrt().matrix();
  return g;
}

// ------------------------------------------------------ differences

GridFunction derivative(const GridFunction& f, std::size_t axis) {
  if (axis >= f.dim()) throw std::out_of_range("derivative: axis out of range");
  const auto& g = *f.axes[axis];
  const std::size_t N = g.size();
  const double h = g.v_step();
  const auto& x = g.x();
  GridFunction out = GridFunction::zeros_like(f);
  // d/dx = phi'(x) d/dv with centered differences in v, fourth order away
  // from the ends.
  auto apply = [&](auto get, auto set) {
    set(0, (get(1) - get(0)) / (x[1] - x[0]));
    for (std::size_t k = 1; k + 1 < N; ++k) {
      double dv;
      if (k >= 2 && k + 2 < N) {
        dv = (-get(k + 2) + 8.0 * get(k + 1) - 8.0 * get(k - 1) + get(k - 2)) / (12.0 * h);
      } else {
        dv = (get(k + 1) - get(k - 1)) / (2.0 * h);
      }
      set(k, phi_prime(g.params(), x[k]) * dv);
    }
    set(N - 1, phi_prime(g.params(), x[N - 1]) * (get(N - 1) - get(N - 2)) / h);
  };
  for (Eigen::Index other = 0; other < (axis == 0 ? f.values.cols() : f.values.rows()); ++other) {
    if (axis == 0) {
      apply([&](std::size_t k) { return f.values(static_cast<Eigen::Index>(k), other); },
            [&](std::size_t k, double v) { out.values(static_cast<Eigen::Index>(k), other) = v; });
    } else {
      apply([&](std::size_t k) { return f.values(other, static_cast<Eigen::Index>(k)); },
            [&](std::size_t k, double v) { out.values(other, static_cast<Eigen::Index>(k)) = v; });
    }
  }
  return out;
}

GridFunction second_order(const GridFunction& f, std::size_t axis) {
  if (axis >= f.dim()) throw std::out_of_range("second_order: axis out of range");
  const auto& g = *f.axes[axis];
  const std::size_t N = g.size();
  const double h = g.v_step();
  const double delta = g.params().delta;
  const auto& v = g.v();
  GridFunction out = GridFunction::zeros_like(f);
  // In v = phi(x) the operator x^alpha d^2/dx^2 reads (1/2) d^2/dv^2 + ((delta - 1) / 2v) d/dv.
  auto apply = [&](auto get, auto set) {
    for (std::size_t k = 1; k + 1 < N; ++k) {
      double d1, d2;
      if (k >= 2 && k + 2 < N) {
        d1 = (-get(k + 2) + 8.0 * get(k + 1) - 8.0 * get(k - 1) + get(k - 2)) / (12.0 * h);
        d2 = (-get(k + 2) + 16.0 * get(k + 1) - 30.0 * get(k) + 16.0 * get(k - 1) - get(k - 2)) / (12.0 * h * h);
      } else {
        d1 = (get(k + 1) - get(k - 1)) / (2.0 * h);
        d2 = (get(k + 1) - 2.0 * get(k) + get(k - 1)) / (h * h);
      }
      set(k, 0.5 * d2 + (delta - 1.0) / (2.0 * v[k]) * d1);
    }
  };
  for (Eigen::Index other = 0; other < (axis == 0 ? f.values.cols() : f.values.rows()); ++other) {
    if (axis == 0) {
      apply([&](std::size_t k) { return f.values(static_cast<Eigen::Index>(k), other); },
            [&](std::size_t k, double val) { out.values(static_cast<Eigen::Index>(k), other) = val; });
    } else {
      apply([&](std::size_t k) { return f.values(other, static_cast<Eigen::Index>(k)); },
            [&](std::size_t k, double val) { out.values(other, static_cast<Eigen::Index>(k)) = val; });
    }
  }
  return out;
}

// ---------------------------------------------------------- free API

GridFunction semigroup_apply(const OperatorEngine& e, double t, const GridFunction& f) { return e.semigroup(t, f); }
GridFunction resolvent_apply(const OperatorEngine& e, double lambda, const GridFunction& f) {
  return e.resolvent(lambda, f);
}
GridFunction poisson_apply(const OperatorEngine& e, double y, const GridFunction& f) { return e.poisson(y, f); }
GridFunction g_function(const OperatorEngine& e, const GridFunction& f) { return e.g_function(f); }

NormReport first_deriv_norm(const OperatorEngine& e, double t, double p, const GridFunction& f, std::size_t axis,
                            const OperatorEngine* coarse) {
  auto r = make_report("first_deriv", f, p, t, derivative(e.semigroup(t, f), axis).lp_norm(p));
  if (coarse != nullptr) {
    const auto fc = resample(f, axes_of(*coarse));
    r.refinement_err = std::abs(r.ratio - first_deriv_norm(*coarse, t, p, fc, axis).ratio);
  }
  return r;
}

NormReport resolvent_deriv_norm(const OperatorEngine& e, double lambda, double p, const GridFunction& f,
                                std::size_t axis, const OperatorEngine* coarse) {
  auto r = make_report("resolvent_deriv", f, p, lambda, derivative(e.resolvent(lambda, f), axis).lp_norm(p));
  if (coarse != nullptr) {
    const auto fc = resample(f, axes_of(*coarse));
    r.refinement_err = std::abs(r.ratio - resolvent_deriv_norm(*coarse, lambda, p, fc, axis).ratio);
  }
  return r;
}

std::pair<GridFunction, NormReport> second_order_apply(const OperatorEngine& e, std::size_t axis, double lambda,
                                                       double p, const GridFunction& f,
                                                       const OperatorEngine* coarse) {
  auto a = second_order(e.resolvent(lambda, f), axis);
  auto r = make_report("second_order", f, p, lambda, a.lp_norm(p));
  if (coarse != nullptr) {
    const auto fc = resample(f, axes_of(*coarse));
    r.refinement_err = std::abs(r.ratio - second_order_apply(*coarse, axis, lambda, p, fc).second.ratio);
  }
  return {std::move(a), r};
}

NormReport g_function_norm(const OperatorEngine& e, double p, const GridFunction& f, const OperatorEngine* coarse) {
  auto r = make_report("g_function", f, p, 0.0, e.g_function(f).lp_norm(p));
  if (coarse != nullptr) {
    const auto fc = resample(f, axes_of(*coarse));
    r.refinement_err = std::abs(r.ratio - g_function_norm(*coarse, p, fc).ratio);
  }
  return r;
}

// ------------------------------------------------------ pointwise

double semigroup_point(const KernelParams& p, double t, const std::function<double(double)>& f, double x, double lo,
                       double hi, const QuadOptions& opts) {
  if (!(lo < hi)) return 0.0;
  auto pts = kernel_breakpoints(p, t, x);
  std::vector<double> cuts{std::max(lo, pts.front())};
  for (double c : pts) {
    if (c > cuts.back() && c < hi) cuts.push_back(c);
  }
  const double end = std::min(hi, pts.back());
  if (end <= cuts.back()) return 0.0;
  cuts.push_back(end);
  auto g = [&](double y) { return y > 0.0 ? f(y) * density_z(p, t, x, y) : 0.0; };
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const auto r = cuts[k] == 0.0 ? integrate_left_power(g, 0.0, cuts[k + 1], -p.alpha, opts)
                                  : integrate(g, cuts[k], cuts[k + 1], opts);
    total += value_or_throw(r, "semigroup_point");
  }
  return total;
}

double resolvent_point(const KernelParams& p, double lambda, const std::function<double(double)>& f, double x,
                       double lo, double hi, double nodes_per_decade, double t_min, double horizon) {
  if (!(lambda > 0.0)) throw std::domain_error("resolvent_point: lambda must be positive");
  const double m = nodes_per_decade;
  const long k0 = static_cast<long>(std::floor(m * std::log10(t_min)));
  const long k1 = static_cast<long>(std::ceil(m * std::log10(horizon / lambda)));
  const double h = std::log(10.0) / m;
  const double first = std::pow(10.0, static_cast<double>(k0) / m);
  double total = first * (x >= lo && x <= hi ? f(x) : 0.0);
  for (long k = k0; k <= k1; ++k) {
    const double t = std::pow(10.0, static_cast<double>(k) / m);
    const double end = (k == k0 || k == k1) ? 0.5 : 1.0;
    total += end * h * t * std::exp(-lambda * t) * semigroup_point(p, t, f, x, lo, hi);
  }
  return total;
}

double lp_norm_point(double alpha, double p, const std::function<double(double)>& f, double lo, double hi,
                     const QuadOptions& opts) {
  if (!(lo < hi)) return 0.0;
  auto g = [&](double x) { return x > 0.0 ? std::pow(std::abs(f(x)), p) * std::pow(x, -alpha) : 0.0; };
  const auto r = lo == 0.0 ? integrate_left_power(g, 0.0, hi, -alpha, opts) : integrate(g, lo, hi, opts);
  return std::pow(value_or_throw(r, "lp_norm_point"), 1.0 / p);
}

double bump(double x, double center, double half_width) {
  const double r = (x - center) / half_width;
  if (std::abs(r) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r * r));
}

}  // namespace degdiff
