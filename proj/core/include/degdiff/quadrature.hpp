#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace degdiff {

/// Raised when an integral (or anything built on one) misses its tolerance.
/// Carries the best estimate obtained so far.
class numerical_failure : public std::runtime_error {
 public:
  numerical_failure(const std::string& what, double partial, double error_estimate)
      : std::runtime_error(what), partial_(partial), error_estimate_(error_estimate) {}
  double partial() const noexcept { return partial_; }
  double error_estimate() const noexcept { return error_estimate_; }

 private:
  double partial_;
  double error_estimate_;
};

struct QuadOptions {
  double abs_tol = 1e-13;
  double rel_tol = 1e-11;
  std::size_t max_intervals = 2000;
};

template <class V>
struct QuadResult {
  V value{};
  double abs_error = 0.0;
  std::size_t intervals = 0;
  bool converged = false;
};

namespace quad_detail {

// Kronrod nodes (descending, last is the centre) and weights; Gauss weights
// belong to the odd-indexed Kronrod nodes and the centre.
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

// Component access so the same code serves scalars and std::array values.
inline constexpr std::size_t width(const double&) { return 1; }
template <std::size_t N>
constexpr std::size_t width(const std::array<double, N>&) { return N; }
inline double& at(double& v, std::size_t) { return v; }
inline double at(const double& v, std::size_t) { return v; }
template <std::size_t N>
double& at(std::array<double, N>& v, std::size_t i) { return v[i]; }
template <std::size_t N>
double at(const std::array<double, N>& v, std::size_t i) { return v[i]; }

template <class V>
struct Segment {
  double a, b;
  V value;
  double error;
  bool operator<(const Segment& o) const { return error < o.error; }
};

// One 15-point Kronrod evaluation with the QUADPACK error heuristic.
template <class V, class F>
Segment<V> kronrod15(F& f, double a, double b) {
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const V fc = f(centre);
  V resk{}, resg{}, resabs{}, resasc{};
  const std::size_t w = width(fc);
  std::array<V, 7> f1, f2;
  for (std::size_t j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    f1[j] = f(centre - dx);
    f2[j] = f(centre + dx);
  }
  for (std::size_t c = 0; c < w; ++c) {
    double k = kWgk[7] * at(fc, c);
    double g = kWg[3] * at(fc, c);
    double kabs = std::abs(k);
    for (std::size_t j = 0; j < 7; ++j) {
      const double s = at(f1[j], c) + at(f2[j], c);
      k += kWgk[j] * s;
      kabs += kWgk[j] * (std::abs(at(f1[j], c)) + std::abs(at(f2[j], c)));
      if (j % 2 == 1) g += kWg[j / 2] * s;
    }
    const double mean = 0.5 * k;
    double asc = kWgk[7] * std::abs(at(fc, c) - mean);
    for (std::size_t j = 0; j < 7; ++j) {
      asc += kWgk[j] * (std::abs(at(f1[j], c) - mean) + std::abs(at(f2[j], c) - mean));
    }
    at(resk, c) = k * half;
    at(resg, c) = g * half;
    at(resabs, c) = kabs * std::abs(half);
    at(resasc, c) = asc * std::abs(half);
  }
  double err = 0.0;
  for (std::size_t c = 0; c < w; ++c) {
    double e = std::abs(at(resk, c) - at(resg, c));
    const double asc = at(resasc, c);
    if (asc != 0.0 && e != 0.0) e = asc * std::min(1.0, std::pow(200.0 * e / asc, 1.5));
    const double floor = 50.0 * std::numeric_limits<double>::epsilon() * at(resabs, c);
    if (at(resabs, c) > std::numeric_limits<double>::min() / (50.0 * std::numeric_limits<double>::epsilon())) {
      e = std::max(e, floor);
    }
    err = std::max(err, e);
  }
  return {a, b, resk, err};
}

template <class V>
double magnitude(const V& v) {
  double m = 0.0;
  for (std::size_t c = 0; c < width(v); ++c) m = std::max(m, std::abs(at(v, c)));
  return m;
}

}  // namespace quad_detail

/// Adaptive Gauss-Kronrod (7/15) quadrature on a finite interval.
///
/// The integrand may return double or std::array<double, N>; for arrays the
/// error is the largest componentwise error. Bisects the worst interval until
/// the global error estimate meets max(abs_tol, rel_tol * |value|) or the
/// interval budget runs out (converged = false).
template <class F>
auto integrate(F&& f, double a, double b, const QuadOptions& opts = {}) {
  using V = std::decay_t<decltype(f(a))>;
  using quad_detail::Segment;
  QuadResult<V> out;
  if (a == b) {
    out.converged = true;
    return out;
  }
  std::vector<Segment<V>> heap;
  heap.reserve(64);
  heap.push_back(quad_detail::kronrod15<V>(f, a, b));
  auto totals = [&]() {
    V sum{};
    double err = 0.0;
    for (const auto& s : heap) {
      for (std::size_t c = 0; c < quad_detail::width(sum); ++c) quad_detail::at(sum, c) += quad_detail::at(s.value, c);
      err += s.error;
    }
    return std::pair{sum, err};
  };
  auto [value, error] = totals();
  while (error > std::max(opts.abs_tol, opts.rel_tol * quad_detail::magnitude(value))) {
    if (heap.size() >= opts.max_intervals) break;
    std::pop_heap(heap.begin(), heap.end());
    const Segment<V> worst = heap.back();
    heap.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > std::min(worst.a, worst.b) && mid < std::max(worst.a, worst.b))) {
      heap.push_back(worst);
      std::push_heap(heap.begin(), heap.end());
      break;  // interval below floating-point resolution
    }
    const Segment<V> left = quad_detail::kronrod15<V>(f, worst.a, mid);
    const Segment<V> right = quad_detail::kronrod15<V>(f, mid, worst.b);
    for (std::size_t c = 0; c < quad_detail::width(value); ++c) {
      quad_detail::at(value, c) += quad_detail::at(left.value, c) + quad_detail::at(right.value, c) -
                                   quad_detail::at(worst.value, c);
    }
    error += left.error + right.error - worst.error;
    heap.push_back(left);
    std::push_heap(heap.begin(), heap.end());
    heap.push_back(right);
    std::push_heap(heap.begin(), heap.end());
  }
  std::tie(value, error) = totals();
  out.value = value;
  out.abs_error = error;
  out.intervals = heap.size();
  out.converged = error <= std::max(opts.abs_tol, opts.rel_tol * quad_detail::magnitude(value));
  return out;
}

/// integrate() for integrands behaving like (x - a)^beta near the left end,
/// beta > -1. Substitutes x = a + (b - a) s^{1/(1+beta)} so the transformed
/// integrand is bounded.
template <class F>
auto integrate_left_power(F&& f, double a, double b, double beta, const QuadOptions& opts = {}) {
  if (!(beta > -1.0)) throw std::domain_error("integrate_left_power: exponent must exceed -1");
  const double q = 1.0 / (1.0 + beta);
  const double len = b - a;
  auto g = [&](double s) {
    const double sq = std::pow(s, q);
    auto v = f(a + len * sq);
    const double jac = (s > 0.0) ? len * q * sq / s : 0.0;
    for (std::size_t c = 0; c < quad_detail::width(v); ++c) quad_detail::at(v, c) *= jac;
    return v;
  };
  return integrate(g, 0.0, 1.0, opts);
}

/// Throws numerical_failure when the result missed its tolerance.
template <class V>
V value_or_throw(const QuadResult<V>& r, const char* what) {
  if (!r.converged) {
    throw numerical_failure(std::string(what) + ": quadrature did not converge", quad_detail::magnitude(r.value),
                            r.abs_error);
  }
  return r.value;
}

}  // namespace degdiff
