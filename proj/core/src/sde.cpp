#include "degdiff/sde.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <sstream>

#include "degdiff/parallel.hpp"
#include "degdiff/quadrature.hpp"

namespace degdiff {
namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double checked(const CoefficientField& f, std::span<const double> x, std::size_t i, const char* kind) {
  const double v = f.eval(x);
  if (!(v >= f.lower && v <= f.upper)) {
    std::ostringstream os;
    os << kind << " coefficient " << i << " (" << f.description << ") evaluated to " << v << " outside ["
       << f.lower << ", " << f.upper << "] at state (";
    for (std::size_t k = 0; k < x.size(); ++k) os << (k ? ", " : "") << x[k];
    os << ")";
    throw model_contract_violation(os.str(), i, std::vector<double>(x.begin(), x.end()));
  }
  return v;
}

}  // namespace

CoefficientField CoefficientField::constant(double value) {
  return {"constant(" + fmt(value) + ")", [value](std::span<const double>) { return value; }, value, value};
}

CoefficientField CoefficientField::affine_clamped(double c0, std::vector<double> slope, double lo, double hi) {
  if (!(lo <= hi)) throw std::invalid_argument("affine_clamped: empty clamp interval");
  std::string d = "affine_clamped(" + fmt(c0) + ";";
  for (double s : slope) d += fmt(s) + ",";
  d += ";" + fmt(lo) + "," + fmt(hi) + ")";
  auto f = [c0, slope = std::move(slope), lo, hi](std::span<const double> x) {
    double v = c0;
    for (std::size_t j = 0; j < slope.size() && j < x.size(); ++j) v += slope[j] * x[j];
    return std::clamp(v, lo, hi);
  };
  return {d, f, lo, hi};
}

CoefficientField CoefficientField::tabulated(std::size_t coordinate, std::vector<double> nodes,
                                             std::vector<double> values) {
  if (nodes.size() != values.size() || nodes.empty()) throw std::invalid_argument("tabulated: size mismatch");
  if (!std::is_sorted(nodes.begin(), nodes.end())) throw std::invalid_argument("tabulated: nodes must increase");
  std::string d = "tabulated(" + std::to_string(coordinate) + ";";
  for (std::size_t k = 0; k < nodes.size(); ++k) d += fmt(nodes[k]) + ":" + fmt(values[k]) + ",";
  d += ")";
  const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
  const double lo = *mn, hi = *mx;
  auto f = [coordinate, nodes = std::move(nodes), values = std::move(values)](std::span<const double> x) {
    const double u = x[coordinate];
    if (u <= nodes.front()) return values.front();
    if (u >= nodes.back()) return values.back();
    const auto it = std::upper_bound(nodes.begin(), nodes.end(), u);
    const std::size_t k = static_cast<std::size_t>(it - nodes.begin());
    const double s = (u - nodes[k - 1]) / (nodes[k] - nodes[k - 1]);
    return values[k - 1] + s * (values[k] - values[k - 1]);
  };
  return {d, f, lo, hi};
}

CoefficientField CoefficientField::custom(std::string description, std::function<double(std::span<const double>)> f,
                                          double lower, double upper) {
  return {std::move(description), std::move(f), lower, upper};
}

void ModelSpec::validate() const {
  const std::size_t d = dim();
  if (d == 0) throw std::invalid_argument("model: dimension must be at least 1");
  if (diffusion.size() != d || drift.size() != d) throw std::invalid_argument("model: coefficient count mismatch");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("model: epsilon must be nonnegative");
  if (!(c1 >= 1.0)) throw std::invalid_argument("model: bound c1 must be at least 1");
  for (std::size_t i = 0; i < d; ++i) {
    if (!(alphas[i] > 0.0 && alphas[i] < 1.0)) throw std::invalid_argument("model: exponents must lie in (0, 1)");
    if (!diffusion[i].eval || !drift[i].eval) throw std::invalid_argument("model: coefficient without evaluator");
    const double tol = 1e-12;
    if (diffusion[i].lower < 1.0 / c1 - tol || diffusion[i].upper > c1 + tol) {
      throw std::invalid_argument("model: diffusion coefficient " + std::to_string(i) +
                                  " declared outside [1/c1, c1]");
    }
    if (drift[i].lower < -c1 - tol || drift[i].upper > c1 + tol) {
      throw std::invalid_argument("model: drift coefficient " + std::to_string(i) + " declared outside [-c1, c1]");
    }
  }
}

std::uint64_t ModelSpec::digest() const {
  std::string s = "eps=" + fmt(epsilon) + ";c1=" + fmt(c1);
  for (std::size_t i = 0; i < dim(); ++i) {
    s += ";alpha=" + fmt(alphas[i]) + ";a=" + diffusion[i].description + ";b=" + drift[i].description;
  }
  return fnv1a(s);
}

ModelSpec ModelSpec::constant_coefficients(std::vector<double> alphas, double a, double b, double epsilon) {
  ModelSpec m;
  const std::size_t d = alphas.size();
  m.alphas = std::move(alphas);
  m.diffusion.assign(d, CoefficientField::constant(a));
  m.drift.assign(d, CoefficientField::constant(b));
  m.epsilon = epsilon;
  m.c1 = std::max({1.0, a, 1.0 / a, std::abs(b)});
  m.validate();
  return m;
}

void SchemeConfig::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("scheme: dt must be positive");
  if (!(horizon >= dt)) throw std::invalid_argument("scheme: horizon must be at least dt");
  if (n_paths < 1) throw std::invalid_argument("scheme: n_paths must be at least 1");
}

EulerStepper::EulerStepper(const ModelSpec& model, std::span<const double> x0, Projection projection)
    : model_(&model), projection_(projection), x_(x0.begin(), x0.end()), local_(x0.size(), 0.0),
      proposal_(x0.size(), 0.0), projected_(x0.size(), 0), diff_(x0.size()), drift_(x0.size()),
      half_alpha_(x0.size()), noise_(x0.size()) {
  if (x0.size() != model.dim()) throw std::invalid_argument("EulerStepper: start point has wrong dimension");
  for (std::size_t i = 0; i < x0.size(); ++i) {
    if (!(x0[i] >= 0.0)) throw std::invalid_argument("EulerStepper: start point must lie in the closed orthant");
    half_alpha_[i] = 0.5 * model.alphas[i];
  }
}

void EulerStepper::step(double dt, Rng& rng) {
  const double sdt = std::sqrt(dt);
  for (double& w : noise_) w = sdt * rng.normal();
  step_increments(dt, noise_);
}

void EulerStepper::step_increments(double dt, std::span<const double> dw) {
  const std::size_t d = x_.size();
  if (dw.size() != d) throw std::invalid_argument("EulerStepper: one Brownian increment per coordinate");
  for (std::size_t i = 0; i < d; ++i) {
    diff_[i] = checked(model_->diffusion[i], x_, i, "diffusion");
    drift_[i] = checked(model_->drift[i], x_, i, "drift");
  }
  for (std::size_t i = 0; i < d; ++i) {
    const double base = std::max(x_[i], 0.0) + model_->epsilon;
    const double vol = std::sqrt(2.0 * diff_[i]) * std::pow(base, half_alpha_[i]);
    const double prop = x_[i] + vol * dw[i] + drift_[i] * dt;
    if (!std::isfinite(prop)) {
      throw numerical_failure("Euler step produced a non-finite state in coordinate " + std::to_string(i), x_[i], 0.0);
    }
    proposal_[i] = prop;
    projected_[i] = prop < 0.0;
    if (prop >= 0.0) {
      x_[i] = prop;
    } else if (projection_ == Projection::reflect) {
      x_[i] = -prop;
      local_[i] += -2.0 * prop;
    } else {
      x_[i] = 0.0;
      local_[i] += -prop;
    }
  }
}

PathSample simulate_reflected_path(const ModelSpec& model, std::span<const double> x0, const SchemeConfig& cfg,
                                   const RandomStream& stream) {
  cfg.validate();
  const std::size_t steps = static_cast<std::size_t>(std::floor(cfg.horizon / cfg.dt * (1.0 + 1e-12)));
  const std::size_t d = model.dim();
  PathSample p;
  p.dim = d;
  p.times.resize(steps + 1);
  p.states.resize((steps + 1) * d);
  if (cfg.record_local_time) p.local_time.emplace((steps + 1) * d, 0.0);
  p.provenance = {cfg.projection == Projection::reflect ? "euler-reflect" : "euler-truncate", model.digest(), stream};
  Rng rng(stream);
  EulerStepper st(model, x0, cfg.projection);
  std::copy(x0.begin(), x0.end(), p.states.begin());
  for (std::size_t k = 1; k <= steps; ++k) {
    st.step(cfg.dt, rng);
    p.times[k] = static_cast<double>(k) * cfg.dt;
    std::copy(st.state().begin(), st.state().end(), p.states.begin() + static_cast<std::ptrdiff_t>(k * d));
    if (p.local_time) {
      std::copy(st.local_time().begin(), st.local_time().end(),
                p.local_time->begin() + static_cast<std::ptrdiff_t>(k * d));
    }
  }
  return p;
}

std::vector<PathSample> simulate_reflected(const ModelSpec& model, std::span<const double> x0,
                                           const SchemeConfig& cfg, std::uint64_t seed, std::uint64_t salt) {
  model.validate();
  cfg.validate();
  std::vector<PathSample> out(cfg.n_paths);
  parallel_for(cfg.n_paths, [&](std::size_t n) { out[n] = simulate_reflected_path(model, x0, cfg, path_stream(seed, salt, n)); });
  return out;
}

std::vector<double> transform_gamma(std::span<const double> alphas, std::span<const double> x) {
  if (alphas.size() != x.size()) throw std::invalid_argument("transform_gamma: dimension mismatch");
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0)) throw std::domain_error("transform_gamma: coordinates must be positive");
    const double b = 1.0 - 0.5 * alphas[i];
    y[i] = std::pow(x[i], b) / b;
  }
  return y;
}

std::vector<double> inverse_transform_gamma(std::span<const double> alphas, std::span<const double> y) {
  if (alphas.size() != y.size()) throw std::invalid_argument("inverse_transform_gamma: dimension mismatch");
  std::vector<double> x(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(y[i] > 0.0)) throw std::domain_error("inverse_transform_gamma: coordinates must be positive");
    const double b = 1.0 - 0.5 * alphas[i];
    x[i] = std::pow(b * y[i], 1.0 / b);
  }
  return x;
}

MonteCarloReport tightness_modulus(std::span<const PathSample> paths, double delta, double t0, double M,
                                   double probe) {
  if (paths.empty()) throw std::invalid_argument("tightness_modulus: no paths");
  if (!(probe > 0.0) || !(delta > 0.0) || !(M > 0.0)) throw std::invalid_argument("tightness_modulus: bad parameters");
  std::size_t hits = 0;
  for (const auto& p : paths) {
    if (p.times.size() < 2) throw std::invalid_argument("tightness_modulus: path too short");
    double max_step = 0.0;
    for (std::size_t k = 1; k < p.times.size(); ++k) max_step = std::max(max_step, p.times[k] - p.times[k - 1]);
    if (max_step >= probe) {
      throw std::invalid_argument("tightness_modulus: grid step " + fmt(max_step) + " is not finer than probe " +
                                  fmt(probe));
    }
    // Last usable index: before exiting [0, M]^d and not after t0.
    std::size_t end = 0;
    while (end + 1 < p.times.size() && p.times[end + 1] <= t0) {
      bool inside = true;
      for (std::size_t i = 0; i < p.dim; ++i) inside = inside && p.state(end + 1, i) <= M;
      if (!inside) break;
      ++end;
    }
    bool exceeded = false;
    for (std::size_t i = 0; i < p.dim && !exceeded; ++i) {
      std::deque<std::size_t> mx, mn;
      std::size_t left = 0;
      for (std::size_t k = 0; k <= end && !exceeded; ++k) {
        while (p.times[k] - p.times[left] >= probe) {
          if (!mx.empty() && mx.front() == left) mx.pop_front();
          if (!mn.empty() && mn.front() == left) mn.pop_front();
          ++left;
        }
        const double v = p.state(k, i);
        while (!mx.empty() && p.state(mx.back(), i) <= v) mx.pop_back();
        while (!mn.empty() && p.state(mn.back(), i) >= v) mn.pop_back();
        mx.push_back(k);
        mn.push_back(k);
        exceeded = p.state(mx.front(), i) - p.state(mn.front(), i) > delta;
      }
    }
    hits += exceeded ? 1 : 0;
  }
  const double n = static_cast<double>(paths.size());
  const double phat = static_cast<double>(hits) / n;
  MonteCarloReport r;
  r.estimate = phat;
  r.std_error = std::sqrt(std::max(phat * (1.0 - phat), 0.0) / n);
  r.n_paths = paths.size();
  r.scheme = paths.front().provenance.scheme;
  r.parameters = {{"delta", delta}, {"t0", t0}, {"M", M}, {"probe", probe}};
  return r;
}

}  // namespace degdiff
