#include "degdiff/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "degdiff/operators.hpp"
#include "degdiff/parallel.hpp"

namespace degdiff {

namespace {

constexpr double kDtSeparation = 10.0;

MonteCarloReport column_report(const Eigen::MatrixXd& m, Eigen::Index col, const PathSpec& spec,
                               nlohmann::json params) {
  RunningStats s;
  for (Eigen::Index r = 0; r < m.rows(); ++r) s.add(m(r, col));
  MonteCarloReport rep;
  rep.estimate = s.mean();
  rep.std_error = s.std_error();
  rep.n_paths = s.count();
  rep.scheme = to_string(spec.scheme);
  rep.parameters = std::move(params);
  rep.parameters["path_spec"] = spec.to_json();
  return rep;
}

MonteCarloReport vector_report(std::span<const double> v, const PathSpec& spec, nlohmann::json params) {
  const auto ms = mean_se(v);
  MonteCarloReport rep;
  rep.estimate = ms.mean;
  rep.std_error = ms.std_error;
  rep.n_paths = ms.n;
  rep.scheme = to_string(spec.scheme);
  rep.parameters = std::move(params);
  rep.parameters["path_spec"] = spec.to_json();
  return rep;
}

// Refuses observation steps that do not separate from the time scale of a
// spatial level: dt <= level^{2b} / 10 for every coordinate.
void require_resolution(const PathSpec& spec, double level, const char* what) {
  double need = std::numeric_limits<double>::infinity();
  for (double a : spec.model.alphas) need = std::min(need, std::pow(level, 2.0 - a) / kDtSeparation);
  if (spec.observation_step() > need * (1.0 + 1e-12)) {
    throw std::invalid_argument(std::string(what) + ": observation step " + std::to_string(spec.observation_step()) +
                                " too coarse for level " + std::to_string(level) + "; required dt <= " +
                                std::to_string(need));
  }
}

double bump_profile(double r) {
  if (std::abs(r) >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - r * r));
}
double bump_profile_d1(double r) {
  if (std::abs(r) >= 1.0) return 0.0;
  const double q = 1.0 - r * r;
  return bump_profile(r) * (-2.0 * r / (q * q));
}
double bump_profile_d2(double r) {
  if (std::abs(r) >= 1.0) return 0.0;
  const double q = 1.0 - r * r;
  const double a = 2.0 * r / (q * q);
  return bump_profile(r) * (a * a - 2.0 / (q * q) - 8.0 * r * r / (q * q * q));
}

}  // namespace

std::string to_string(Scheme s) { return s == Scheme::exact ? "exact" : "euler"; }

// ------------------------------------------------------------------ PathSpec

std::size_t PathSpec::observations() const {
  return static_cast<std::size_t>(std::floor(horizon / observation_step() * (1.0 + 1e-12)));
}

void PathSpec::validate() const {
  model.validate();
  const std::size_t d = model.dim();
  if (x0.size() != d) throw std::invalid_argument("path spec: start point has wrong dimension");
  for (double x : x0) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw std::invalid_argument("path spec: start point outside the orthant");
  }
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("path spec: dt must be positive");
  if (stride == 0) throw std::invalid_argument("path spec: stride must be at least 1");
  if (!(horizon >= observation_step())) throw std::invalid_argument("path spec: horizon shorter than one observation");
  if (n_paths == 0) throw std::invalid_argument("path spec: n_paths must be positive");
  if (scheme == Scheme::exact) {
    if (model.epsilon != 0.0) throw std::invalid_argument("path spec: exact scheme requires epsilon = 0");
    for (std::size_t i = 0; i < d; ++i) {
      if (model.diffusion[i].lower != model.diffusion[i].upper) {
        throw std::invalid_argument("path spec: exact scheme requires constant diffusion coefficients");
      }
      if (model.drift[i].lower != 0.0 || model.drift[i].upper != 0.0) {
        throw std::invalid_argument("path spec: exact scheme requires zero drift");
      }
    }
  }
}

nlohmann::json PathSpec::to_json() const {
  return {{"alphas", model.alphas},
          {"epsilon", model.epsilon},
          {"model_digest", model.digest()},
          {"x0", x0},
          {"scheme", to_string(scheme)},
          {"dt", dt},
          {"stride", stride},
          {"horizon", horizon},
          {"projection", projection == Projection::reflect ? "reflect" : "truncate"},
          {"n_paths", n_paths},
          {"seed", seed},
          {"salt", salt}};
}

// ---------------------------------------------------------------- PathCursor

PathCursor::PathCursor(const PathSpec& spec, std::size_t path_index)
    : spec_(&spec),
      d_(spec.model.dim()),
      n_obs_(spec.observations()),
      h_(spec.observation_step()),
      rng_(path_stream(spec.seed, spec.salt, path_index)),
      x_(spec.x0),
      zeros_(spec.model.dim(), 0.0) {
  if (spec.scheme == Scheme::exact) {
    exact_.reserve(d_);
    for (std::size_t i = 0; i < d_; ++i) {
      exact_.emplace_back(kernel_params(spec.model.alphas[i]), spec.x0[i]);
      clock_.push_back(spec.model.diffusion[i].lower * h_);
    }
  } else {
    euler_.emplace(spec.model, spec.x0, spec.projection);
  }
}

bool PathCursor::advance() {
  if (k_ >= n_obs_) return false;
  if (!exact_.empty()) {
    for (std::size_t i = 0; i < d_; ++i) exact_[i].step(clock_[i], rng_);
    fresh_ = false;
  } else {
    for (std::size_t s = 0; s < spec_->stride; ++s) euler_->step(spec_->dt, rng_);
  }
  ++k_;
  return true;
}

std::span<const double> PathCursor::state() {
  if (exact_.empty()) return euler_->state();
  if (!fresh_) {
    for (std::size_t i = 0; i < d_; ++i) x_[i] = exact_[i].z();
    fresh_ = true;
  }
  return x_;
}

std::span<const double> PathCursor::local_time() const {
  return exact_.empty() ? euler_->local_time() : std::span<const double>(zeros_);
}

void for_each_path(const PathSpec& spec, const std::function<void(std::size_t, PathCursor&)>& body) {
  spec.validate();
  parallel_for(spec.n_paths, [&](std::size_t n) {
    PathCursor c(spec, n);
    body(n, c);
  }, 16);
}

double crossing_fraction(double before, double after, double level) {
  if (after == before) return 1.0;
  return std::clamp((level - before) / (after - before), 0.0, 1.0);
}

// ------------------------------------------------------------ test functions

double TestFunctionSpec::value(std::span<const double> x) const {
  switch (kind) {
    case Kind::bump: {
      double v = amplitude;
      for (std::size_t i = 0; i < lo.size(); ++i) {
        const double c = 0.5 * (lo[i] + hi[i]), w = 0.5 * (hi[i] - lo[i]);
        v *= bump_profile((x[i] - c) / w);
        if (v == 0.0) return 0.0;
      }
      return v;
    }
    case Kind::indicator:
      for (std::size_t i = 0; i < lo.size(); ++i) {
        if (x[i] < lo[i] || x[i] > hi[i]) return 0.0;
      }
      return amplitude;
    case Kind::coordinate_monotone:
      return amplitude * scale * (1.0 - std::exp(-x[coordinate] / scale));
  }
  return 0.0;
}

double TestFunctionSpec::d1(std::size_t i, std::span<const double> x) const {
  switch (kind) {
    case Kind::bump: {
      double v = amplitude;
      for (std::size_t j = 0; j < lo.size(); ++j) {
        const double c = 0.5 * (lo[j] + hi[j]), w = 0.5 * (hi[j] - lo[j]);
        const double r = (x[j] - c) / w;
        v *= j == i ? bump_profile_d1(r) / w : bump_profile(r);
        if (v == 0.0) return 0.0;
      }
      return v;
    }
    case Kind::indicator:
      return 0.0;
    case Kind::coordinate_monotone:
      return i == coordinate ? amplitude * std::exp(-x[coordinate] / scale) : 0.0;
  }
  return 0.0;
}

double TestFunctionSpec::d2(std::size_t i, std::span<const double> x) const {
  switch (kind) {
    case Kind::bump: {
      double v = amplitude;
      for (std::size_t j = 0; j < lo.size(); ++j) {
        const double c = 0.5 * (lo[j] + hi[j]), w = 0.5 * (hi[j] - lo[j]);
        const double r = (x[j] - c) / w;
        v *= j == i ? bump_profile_d2(r) / (w * w) : bump_profile(r);
        if (v == 0.0) return 0.0;
      }
      return v;
    }
    case Kind::indicator:
      return 0.0;
    case Kind::coordinate_monotone:
      return i == coordinate ? -amplitude * std::exp(-x[coordinate] / scale) / scale : 0.0;
  }
  return 0.0;
}

double TestFunctionSpec::generator(const ModelSpec& model, std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < model.dim(); ++i) {
    const double f2 = d2(i, x), f1 = d1(i, x);
    if (f2 != 0.0) {
      s += model.diffusion[i].eval(x) * std::pow(std::max(x[i], 0.0) + model.epsilon, model.alphas[i]) * f2;
    }
    if (f1 != 0.0) s += model.drift[i].eval(x) * f1;
  }
  return s;
}

bool TestFunctionSpec::certified() const {
  if (kind == Kind::indicator || smoothness == "discontinuous") return false;
  return std::all_of(faces.begin(), faces.end(),
                     [](FaceSign f) { return f == FaceSign::zero || f == FaceSign::nonnegative; });
}

double TestFunctionSpec::lp_norm(double p) const {
  if (!(p >= 1.0)) throw std::domain_error("lp_norm: p must be at least 1");
  switch (kind) {
    case Kind::coordinate_monotone:
      return amplitude == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    case Kind::indicator: {
      double vol = 1.0;
      for (std::size_t i = 0; i < lo.size(); ++i) vol *= std::max(0.0, hi[i] - std::max(lo[i], 0.0));
      return std::abs(amplitude) * std::pow(vol, 1.0 / p);
    }
    case Kind::bump: {
      double prod = 1.0;
      for (std::size_t i = 0; i < lo.size(); ++i) {
        const double c = 0.5 * (lo[i] + hi[i]), w = 0.5 * (hi[i] - lo[i]);
        const double a = std::max(lo[i], 0.0);
        if (hi[i] <= a) return 0.0;
        auto g = [&](double x) { return std::pow(bump_profile((x - c) / w), p); };
        prod *= value_or_throw(integrate(g, a, hi[i], {1e-15, 1e-12, 2000}), "bump norm");
      }
      return std::abs(amplitude) * std::pow(prod, 1.0 / p);
    }
  }
  return 0.0;
}

nlohmann::json TestFunctionSpec::to_json() const {
  static const char* kinds[] = {"bump", "coordinate-monotone", "indicator"};
  static const char* signs[] = {"zero", "nonnegative", "negative", "unknown"};
  nlohmann::json faces_j = nlohmann::json::array();
  for (FaceSign f : faces) faces_j.push_back(signs[static_cast<int>(f)]);
  nlohmann::json j = {{"kind", kinds[static_cast<int>(kind)]},
                      {"amplitude", amplitude},
                      {"smoothness", smoothness},
                      {"faces", faces_j},
                      {"certified", certified()}};
  if (kind == Kind::coordinate_monotone) {
    j["coordinate"] = coordinate;
    j["scale"] = scale;
  } else {
    j["lo"] = lo;
    j["hi"] = hi;
  }
  return j;
}

TestFunctionSpec TestFunctionSpec::bump(std::vector<double> lo, std::vector<double> hi, double amplitude) {
  if (lo.empty() || lo.size() != hi.size()) throw std::invalid_argument("bump: box corners must match");
  TestFunctionSpec f;
  f.kind = Kind::bump;
  f.amplitude = amplitude;
  f.smoothness = "C-infinity";
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(lo[i] < hi[i])) throw std::invalid_argument("bump: empty box");
    const double c = 0.5 * (lo[i] + hi[i]);
    FaceSign s;
    if (lo[i] >= 0.0 || hi[i] <= 0.0 || c == 0.0 || amplitude == 0.0) {
      s = FaceSign::zero;
    } else {
      s = (c > 0.0) == (amplitude > 0.0) ? FaceSign::nonnegative : FaceSign::negative;
    }
    f.faces.push_back(s);
  }
  f.lo = std::move(lo);
  f.hi = std::move(hi);
  return f;
}

TestFunctionSpec TestFunctionSpec::indicator(std::vector<double> lo, std::vector<double> hi, double amplitude) {
  if (lo.empty() || lo.size() != hi.size()) throw std::invalid_argument("indicator: box corners must match");
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (!(lo[i] < hi[i])) throw std::invalid_argument("indicator: empty box");
  }
  TestFunctionSpec f;
  f.kind = Kind::indicator;
  f.amplitude = amplitude;
  f.smoothness = "discontinuous";
  f.faces.assign(lo.size(), FaceSign::unknown);
  f.lo = std::move(lo);
  f.hi = std::move(hi);
  return f;
}

TestFunctionSpec TestFunctionSpec::coordinate_monotone(std::size_t dim, std::size_t coordinate, double scale) {
  if (coordinate >= dim) throw std::invalid_argument("coordinate_monotone: coordinate out of range");
  if (!(scale > 0.0)) throw std::invalid_argument("coordinate_monotone: scale must be positive");
  TestFunctionSpec f;
  f.kind = Kind::coordinate_monotone;
  f.coordinate = coordinate;
  f.scale = scale;
  f.smoothness = "C-infinity";
  f.faces.assign(dim, FaceSign::zero);
  f.faces[coordinate] = FaceSign::nonnegative;
  return f;
}

TestFunctionSpec TestFunctionSpec::normalized(double p) const {
  const double n = lp_norm(p);
  if (!(n > 0.0) || !std::isfinite(n)) throw std::domain_error("normalized: norm must be positive and finite");
  TestFunctionSpec f = *this;
  f.amplitude /= n;
  return f;
}

std::vector<TestFunctionSpec> theta_family(std::size_t dim, double M, double p0) {
  if (dim == 0 || !(M > 0.0)) throw std::invalid_argument("theta_family: need dim >= 1 and M > 0");
  std::vector<TestFunctionSpec> fam;
  for (int ci = 0; ci < 4; ++ci) {
    const double c = M * (2.0 * ci + 1.0) / 8.0;
    for (int wi = 1; wi <= 4; ++wi) {
      const double w = M * wi / 32.0;
      fam.push_back(TestFunctionSpec::bump(std::vector<double>(dim, c - w), std::vector<double>(dim, c + w))
                        .normalized(p0));
    }
  }
  for (int k = 0; k < 4; ++k) {
    std::vector<double> lo(dim, 0.0), hi(dim, M);
    hi[static_cast<std::size_t>(k) % dim] = M * std::pow(0.5, 3 - k);
    fam.push_back(TestFunctionSpec::indicator(lo, hi).normalized(p0));
  }
  return fam;
}

// ----------------------------------------------------------------- occupation

OccupationResult occupation_time(const PathSpec& spec, std::span<const double> etas, double K) {
  if (etas.empty()) throw std::invalid_argument("occupation_time: no levels");
  if (!(K > 0.0)) throw std::invalid_argument("occupation_time: K must be positive");
  for (double e : etas) {
    if (!(e > 0.0)) throw std::invalid_argument("occupation_time: levels must be positive");
    if (e < K) require_resolution(spec, e, "occupation_time");
  }
  const std::size_t d = spec.model.dim(), ne = etas.size();
  const double h = spec.observation_step();
  Eigen::MatrixXd occ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(spec.n_paths), static_cast<Eigen::Index>(d * ne));
  std::vector<double> exit(spec.n_paths, 0.0);
  std::vector<char> censored(spec.n_paths, 0);

  for_each_path(spec, [&](std::size_t n, PathCursor& c) {
    std::vector<double> lvl(d * ne), klvl(d), prev(d), acc(d * ne, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      klvl[i] = c.to_raw(i, K);
      for (std::size_t j = 0; j < ne; ++j) lvl[i * ne + j] = c.to_raw(i, etas[j]);
    }
    bool out = false;
    for (std::size_t i = 0; i < d; ++i) out = out || c.raw(i) >= klvl[i];
    double T = 0.0;
    if (!out) {
      censored[n] = 1;
      while (true) {
        for (std::size_t i = 0; i < d; ++i) prev[i] = c.raw(i);
        const double t0 = c.time();
        if (!c.advance()) {
          T = t0;
          break;
        }
        double frac = 1.0;
        for (std::size_t i = 0; i < d; ++i) {
          if (c.raw(i) >= klvl[i]) {
            frac = std::min(frac, crossing_fraction(c.from_raw(i, prev[i]), c.from_raw(i, c.raw(i)), K));
            out = true;
          }
        }
        const double w = out ? frac * h : h;
        for (std::size_t i = 0; i < d; ++i) {
          for (std::size_t j = 0; j < ne; ++j) {
            if (prev[i] <= lvl[i * ne + j]) acc[i * ne + j] += w;
          }
        }
        if (out) {
          T = t0 + w;
          censored[n] = 0;
          break;
        }
      }
    }
    exit[n] = T;
    for (std::size_t k = 0; k < d * ne; ++k) occ(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k)) = acc[k];
  });

  OccupationResult r;
  r.etas.assign(etas.begin(), etas.end());
  r.K = K;
  r.reports.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < ne; ++j) {
      r.reports[i].push_back(column_report(occ, static_cast<Eigen::Index>(i * ne + j), spec,
                                           {{"statistic", "occupation_time"},
                                            {"coordinate", i},
                                            {"eta", etas[j]},
                                            {"K", K}}));
    }
  }
  r.exit_time = vector_report(exit, spec, {{"statistic", "exit_time"}, {"K", K}});
  r.censored_fraction =
      static_cast<double>(std::count(censored.begin(), censored.end(), 1)) / static_cast<double>(spec.n_paths);
  return r;
}

// ---------------------------------------------------------------- upcrossings

nlohmann::json UpcrossingCurve::to_json() const {
  return {{"gamma", gamma}, {"floor", floor}, {"n_paths", n_paths}, {"mean_count", mean_count}, {"exceed", exceed}};
}

std::vector<UpcrossingCurve> upcrossings(const PathSpec& spec, std::span<const double> gammas, double K,
                                         std::size_t coordinate, double floor_fraction) {
  if (coordinate >= spec.model.dim()) throw std::invalid_argument("upcrossings: coordinate out of range");
  if (!(floor_fraction > 0.0 && floor_fraction < 1.0)) throw std::invalid_argument("upcrossings: floor fraction in (0,1)");
  const std::size_t d = spec.model.dim(), ng = gammas.size();
  for (double g : gammas) {
    if (!(g > 0.0)) throw std::invalid_argument("upcrossings: gamma must be positive");
    if (g < K) require_resolution(spec, floor_fraction * g, "upcrossings");
  }
  std::vector<std::size_t> counts(spec.n_paths * ng, 0);
  for_each_path(spec, [&](std::size_t n, PathCursor& c) {
    std::vector<double> top(ng), bottom(ng), klvl(d);
    std::vector<char> armed(ng);
    for (std::size_t i = 0; i < d; ++i) klvl[i] = c.to_raw(i, K);
    for (std::size_t j = 0; j < ng; ++j) {
      top[j] = c.to_raw(coordinate, gammas[j]);
      bottom[j] = c.to_raw(coordinate, floor_fraction * gammas[j]);
      armed[j] = c.raw(coordinate) <= bottom[j];
    }
    auto exited = [&] {
      for (std::size_t i = 0; i < d; ++i) {
        if (c.raw(i) >= klvl[i]) return true;
      }
      return false;
    };
    if (exited()) return;
    while (c.advance()) {
      const double x = c.raw(coordinate);
      const bool out = exited();
      for (std::size_t j = 0; j < ng; ++j) {
        if (armed[j] && x >= top[j] && gammas[j] < K) {
          ++counts[n * ng + j];
          armed[j] = 0;
        } else if (!armed[j] && x <= bottom[j]) {
          armed[j] = 1;
        }
      }
      if (out) break;
    }
  });
  std::vector<UpcrossingCurve> out(ng);
  for (std::size_t j = 0; j < ng; ++j) {
    auto& cv = out[j];
    cv.gamma = gammas[j];
    cv.floor = floor_fraction * gammas[j];
    cv.n_paths = spec.n_paths;
    std::size_t maxc = 0;
    double total = 0.0;
    for (std::size_t n = 0; n < spec.n_paths; ++n) {
      maxc = std::max(maxc, counts[n * ng + j]);
      total += static_cast<double>(counts[n * ng + j]);
    }
    cv.mean_count = total / static_cast<double>(spec.n_paths);
    cv.exceed.assign(maxc + 1, 0);
    for (std::size_t n = 0; n < spec.n_paths; ++n) {
      for (std::size_t m = 0; m < counts[n * ng + j]; ++m) ++cv.exceed[m];
    }
    for (std::size_t e : cv.exceed) cv.survival.push_back(static_cast<double>(e) / static_cast<double>(spec.n_paths));
  }
  return out;
}

LinearFit fit_log_survival(const UpcrossingCurve& c, std::size_t min_count) {
  std::vector<double> m, ls;
  for (std::size_t k = 0; k < c.exceed.size() && c.exceed[k] >= min_count; ++k) {
    m.push_back(static_cast<double>(k));
    ls.push_back(std::log(c.survival[k]));
  }
  if (m.size() < 3) throw std::invalid_argument("fit_log_survival: fewer than 3 levels with enough paths");
  return linear_fit(m, ls);
}

// ---------------------------------------------------- discounted functionals

Eigen::MatrixXd discounted_functionals(const PathSpec& spec, double lambda, std::span<const TestFunctionSpec> fs) {
  if (!(lambda > 0.0)) throw std::invalid_argument("discounted functional: lambda must be positive");
  if (std::exp(-lambda * spec.horizon) >= 1e-6) {
    throw std::invalid_argument("discounted functional: horizon too short, need exp(-lambda T) < 1e-6, i.e. T > " +
                                std::to_string(std::log(1e6) / lambda));
  }
  for (const auto& f : fs) {
    if (f.dim() != spec.model.dim()) throw std::invalid_argument("discounted functional: dimension mismatch");
  }
  const std::size_t nf = fs.size();
  const double h = spec.observation_step();
  const std::size_t N = spec.observations();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(spec.n_paths), static_cast<Eigen::Index>(nf));
  const double decay = std::exp(-lambda * h);
  for_each_path(spec, [&](std::size_t n, PathCursor& c) {
    std::vector<double> acc(nf, 0.0);
    double w = 0.5 * h;  // trapezoid end weight at t = 0
    double disc = 1.0;
    for (std::size_t k = 0;; ++k) {
      const auto x = c.state();
      for (std::size_t j = 0; j < nf; ++j) acc[j] += w * disc * fs[j].value(x);
      if (!c.advance()) break;
      disc *= decay;
      w = (k + 1 == N) ? 0.5 * h : h;
    }
    for (std::size_t j = 0; j < nf; ++j) out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)) = acc[j];
  });
  return out;
}

MonteCarloReport krylov_functional(const PathSpec& spec, double lambda, const TestFunctionSpec& f, double p0) {
  if (f.kind == TestFunctionSpec::Kind::coordinate_monotone) {
    throw std::invalid_argument("krylov_functional: f must have bounded support (bump or indicator)");
  }
  const TestFunctionSpec one[1] = {f};
  const auto m = discounted_functionals(spec, lambda, one);
  const double tail = std::exp(-lambda * spec.horizon) / lambda * f.sup_norm();
  return column_report(m, 0, spec,
                       {{"statistic", "krylov_functional"},
                        {"lambda", lambda},
                        {"p0", p0},
                        {"f", f.to_json()},
                        {"f_lp_norm", f.lp_norm(p0)},
                        {"tail_bias_bound", tail}});
}

// --------------------------------------------------------------- boundary time

std::vector<MonteCarloReport> boundary_time(const PathSpec& spec, std::span<const double> tols) {
  for (double t : tols) {
    if (!(t > 0.0)) throw std::invalid_argument("boundary_time: tolerance must be positive");
    require_resolution(spec, t, "boundary_time");
  }
  const std::size_t d = spec.model.dim(), nt = tols.size();
  const std::size_t N = spec.observations();
  Eigen::MatrixXd frac = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(spec.n_paths), static_cast<Eigen::Index>(nt));
  for_each_path(spec, [&](std::size_t n, PathCursor& c) {
    std::vector<double> lvl(d * nt);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < nt; ++j) lvl[i * nt + j] = c.to_raw(i, tols[j]);
    }
    std::vector<std::size_t> hits(nt, 0);
    while (c.advance()) {
      for (std::size_t j = 0; j < nt; ++j) {
        for (std::size_t i = 0; i < d; ++i) {
          if (c.raw(i) <= lvl[i * nt + j]) {
            ++hits[j];
            break;
          }
        }
      }
    }
    for (std::size_t j = 0; j < nt; ++j) {
      frac(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)) =
          static_cast<double>(hits[j]) / static_cast<double>(N);
    }
  });
  std::vector<MonteCarloReport> out;
  for (std::size_t j = 0; j < nt; ++j) {
    out.push_back(column_report(frac, static_cast<Eigen::Index>(j), spec,
                                {{"statistic", "boundary_time"}, {"tol", tols[j]}}));
  }
  return out;
}

// --------------------------------------------------------------- submartingale

namespace {

std::vector<std::size_t> snap(std::span<const double> times, double h, std::size_t N, const char* what) {
  std::vector<std::size_t> ks;
  for (double t : times) {
    if (!(t >= 0.0)) throw std::invalid_argument(std::string(what) + ": times must be nonnegative");
    const auto k = static_cast<std::size_t>(std::llround(t / h));
    if (k > N) throw std::invalid_argument(std::string(what) + ": time beyond the horizon");
    ks.push_back(k);
  }
  return ks;
}

// M^f at indices `mk` and the weight Y from factors evaluated at indices `wk`.
void martingale_walk(const PathSpec& spec, const TestFunctionSpec& f, const std::vector<std::size_t>& mk,
                     std::span<const WeightFactor> weights, const std::vector<std::size_t>& wk, Eigen::MatrixXd& M,
                     std::vector<double>& Y) {
  const double h = spec.observation_step();
  std::size_t last = 0;
  for (auto k : mk) last = std::max(last, k);
  for (auto k : wk) last = std::max(last, k);
  M = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(spec.n_paths), static_cast<Eigen::Index>(mk.size()));
  Y.assign(spec.n_paths, 1.0);
  for_each_path(spec, [&](std::size_t n, PathCursor& c) {
    auto x = c.state();
    const double f0 = f.value(x);
    double lf_prev = f.generator(spec.model, x);
    double integral = 0.0;
    double y = 1.0;
    for (std::size_t k = 0;; ++k) {
      for (std::size_t j = 0; j < mk.size(); ++j) {
        if (mk[j] == k) M(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(j)) = f.value(x) - f0 - integral;
      }
      for (std::size_t j = 0; j < wk.size(); ++j) {
        if (wk[j] == k) y *= weights[j].g.value(x);
      }
      if (k >= last || !c.advance()) break;
      x = c.state();
      const double lf = f.generator(spec.model, x);
      integral += 0.5 * h * (lf_prev + lf);
      lf_prev = lf;
    }
    Y[n] = y;
  });
}

}  // namespace

Eigen::MatrixXd martingale_values(const PathSpec& spec, const TestFunctionSpec& f, std::span<const double> times) {
  if (f.dim() != spec.model.dim()) throw std::invalid_argument("martingale_values: dimension mismatch");
  const auto mk = snap(times, spec.observation_step(), spec.observations(), "martingale_values");
  Eigen::MatrixXd M;
  std::vector<double> Y;
  martingale_walk(spec, f, mk, {}, {}, M, Y);
  return M;
}

MonteCarloReport submartingale_check(const PathSpec& spec, const TestFunctionSpec& f, double s, double t,
                                     std::span<const WeightFactor> weights) {
  if (!f.certified()) {
    throw std::invalid_argument("submartingale_check: test function lacks a nonnegative boundary-derivative "
                                "certificate on every face");
  }
  if (f.dim() != spec.model.dim()) throw std::invalid_argument("submartingale_check: dimension mismatch");
  if (!(s < t)) throw std::invalid_argument("submartingale_check: need s < t");
  std::vector<double> rs;
  for (const auto& w : weights) {
    if (!(w.r <= s)) throw std::invalid_argument("submartingale_check: weight times must not exceed s");
    if (w.g.dim() != spec.model.dim()) throw std::invalid_argument("submartingale_check: weight dimension mismatch");
    rs.push_back(w.r);
  }
  const double h = spec.observation_step();
  const std::size_t N = spec.observations();
  const double st[2] = {s, t};
  const auto mk = snap(st, h, N, "submartingale_check");
  const auto wk = snap(rs, h, N, "submartingale_check");
  Eigen::MatrixXd M;
  std::vector<double> Y;
  martingale_walk(spec, f, mk, weights, wk, M, Y);
  std::vector<double> gap(spec.n_paths);
  for (std::size_t n = 0; n < spec.n_paths; ++n) {
    gap[n] = (M(static_cast<Eigen::Index>(n), 1) - M(static_cast<Eigen::Index>(n), 0)) * Y[n];
  }
  nlohmann::json wj = nlohmann::json::array();
  for (const auto& w : weights) wj.push_back({{"r", w.r}, {"g", w.g.to_json()}});
  auto rep = vector_report(gap, spec,
                           {{"statistic", "submartingale_gap"}, {"s", s}, {"t", t}, {"f", f.to_json()}, {"weights", wj}});
  rep.parameters["pass"] = rep.estimate >= -3.0 * rep.std_error;
  return rep;
}

// ----------------------------------------------------------------------- Theta

nlohmann::json ThetaReport::to_json() const {
  return {{"theta", theta},       {"bootstrap_se", bootstrap_se}, {"argmax", argmax},
          {"delta", delta},       {"delta_se", delta_se},         {"max_abs_z", max_abs_z},
          {"zero_consistent", zero_consistent}};
}

ThetaReport uniqueness_theta(const PathSpec& a, const PathSpec& b, double lambda,
                             std::span<const TestFunctionSpec> family, bool paired, std::size_t replicates,
                             std::uint64_t bootstrap_seed) {
  if (a.x0 != b.x0) throw std::invalid_argument("uniqueness_theta: batches start from different points");
  if (a.horizon != b.horizon) throw std::invalid_argument("uniqueness_theta: batches use different horizons");
  if (a.model.alphas != b.model.alphas) throw std::invalid_argument("uniqueness_theta: batches use different models");
  if (paired && a.n_paths != b.n_paths) throw std::invalid_argument("uniqueness_theta: paired batches need equal sizes");
  if (family.empty()) throw std::invalid_argument("uniqueness_theta: empty test family");
  const Eigen::MatrixXd A = discounted_functionals(a, lambda, family);
  const Eigen::MatrixXd B = discounted_functionals(b, lambda, family);
  const std::size_t nf = family.size();
  ThetaReport r;
  r.delta.resize(nf);
  r.delta_se.resize(nf);
  for (std::size_t j = 0; j < nf; ++j) {
    const auto J = static_cast<Eigen::Index>(j);
    if (paired) {
      RunningStats s;
      for (Eigen::Index n = 0; n < A.rows(); ++n) s.add(A(n, J) - B(n, J));
      r.delta[j] = s.mean();
      r.delta_se[j] = s.std_error();
    } else {
      RunningStats sa, sb;
      for (Eigen::Index n = 0; n < A.rows(); ++n) sa.add(A(n, J));
      for (Eigen::Index n = 0; n < B.rows(); ++n) sb.add(B(n, J));
      r.delta[j] = sa.mean() - sb.mean();
      r.delta_se[j] = combined_se(sa.std_error(), sb.std_error());
    }
    const double ad = std::abs(r.delta[j]);
    if (ad > r.theta) {
      r.theta = ad;
      r.argmax = j;
    }
    const double z = r.delta_se[j] > 0.0 ? ad / r.delta_se[j] : (ad > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    r.max_abs_z = std::max(r.max_abs_z, z);
  }
  r.zero_consistent = r.max_abs_z <= 3.0;

  std::vector<double> maxima(replicates);
  parallel_for(replicates, [&](std::size_t rep) {
    Rng rng({bootstrap_seed, hash_combine(0x7e7aULL, rep)});
    const auto na = static_cast<std::uint64_t>(A.rows()), nb = static_cast<std::uint64_t>(B.rows());
    std::vector<Eigen::Index> ia(static_cast<std::size_t>(na)), ib;
    for (auto& i : ia) i = static_cast<Eigen::Index>(rng() % na);
    if (paired) {
      ib = ia;
    } else {
      ib.resize(static_cast<std::size_t>(nb));
      for (auto& i : ib) i = static_cast<Eigen::Index>(rng() % nb);
    }
    double m = 0.0;
    for (std::size_t j = 0; j < nf; ++j) {
      const auto J = static_cast<Eigen::Index>(j);
      double sa = 0.0, sb = 0.0;
      for (auto i : ia) sa += A(i, J);
      for (auto i : ib) sb += B(i, J);
      m = std::max(m, std::abs(sa / static_cast<double>(ia.size()) - sb / static_cast<double>(ib.size())));
    }
    maxima[rep] = m;
  });
  r.bootstrap_se = replicates > 1 ? sample_sd(maxima) : 0.0;
  return r;
}

// ------------------------------------------------------------ terminal laws

std::vector<std::vector<double>> coupled_euler_terminal(const ModelSpec& model, std::span<const double> x0,
                                                        double horizon, std::span<const double> dts,
                                                        std::size_t n_paths, std::uint64_t seed, std::uint64_t salt,
                                                        Projection projection) {
  model.validate();
  if (dts.empty()) throw std::invalid_argument("coupled_euler_terminal: no step sizes");
  const double fine = *std::min_element(dts.begin(), dts.end());
  if (!(fine > 0.0)) throw std::invalid_argument("coupled_euler_terminal: step sizes must be positive");
  std::vector<std::size_t> mult;
  for (double dt : dts) {
    const auto m = static_cast<std::size_t>(std::llround(dt / fine));
    if (std::abs(static_cast<double>(m) * fine - dt) > 1e-9 * dt) {
      throw std::invalid_argument("coupled_euler_terminal: step sizes must be multiples of the smallest");
    }
    mult.push_back(m);
  }
  const auto n_fine = static_cast<std::size_t>(std::llround(horizon / fine));
  for (std::size_t m : mult) {
    if (n_fine % m != 0) throw std::invalid_argument("coupled_euler_terminal: horizon must be a multiple of every dt");
  }
  const std::size_t d = model.dim(), nd = dts.size();
  std::vector<std::vector<double>> out(nd, std::vector<double>(n_paths));
  const double sfine = std::sqrt(fine);
  parallel_for(n_paths, [&](std::size_t n) {
    Rng rng(path_stream(seed, salt, n));
    std::vector<EulerStepper> st;
    st.reserve(nd);
    for (std::size_t j = 0; j < nd; ++j) st.emplace_back(model, x0, projection);
    std::vector<double> acc(nd * d, 0.0), dw(d);
    for (std::size_t k = 1; k <= n_fine; ++k) {
      for (std::size_t i = 0; i < d; ++i) {
        dw[i] = sfine * rng.normal();
        for (std::size_t j = 0; j < nd; ++j) acc[j * d + i] += dw[i];
      }
      for (std::size_t j = 0; j < nd; ++j) {
        if (k % mult[j] == 0) {
          st[j].step_increments(dts[j], std::span<const double>(acc.data() + j * d, d));
          std::fill_n(acc.begin() + static_cast<std::ptrdiff_t>(j * d), d, 0.0);
        }
      }
    }
    for (std::size_t j = 0; j < nd; ++j) out[j][n] = st[j].state()[0];
  }, 16);
  return out;
}

std::vector<double> exact_terminal(double alpha, double x0, double horizon, std::size_t n, std::uint64_t seed,
                                   std::uint64_t salt) {
  const auto p = kernel_params(alpha);
  std::vector<double> out(n);
  parallel_for(n, [&](std::size_t k) {
    Rng rng(path_stream(seed, salt, k));
    out[k] = sample_z(p, horizon, x0, rng);
  }, 256);
  return out;
}

}  // namespace degdiff
