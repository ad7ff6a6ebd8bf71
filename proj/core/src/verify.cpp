#include "degdiff/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "degdiff/estimators.hpp"
#include "degdiff/kernel.hpp"
#include "degdiff/operators.hpp"
#include "degdiff/parallel.hpp"
#include "degdiff/quadrature.hpp"
#include "degdiff/random.hpp"
#include "degdiff/sampler.hpp"
#include "degdiff/stats.hpp"

namespace degdiff {

using nlohmann::json;

namespace {

std::uint64_t salt(int criterion, std::uint64_t sub) {
  return hash_combine(0x5eed0000ULL + static_cast<std::uint64_t>(criterion), sub);
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

template <class T>
T at(const json& j, const char* key) {
  return j.at(key).get<T>();
}

using Doubles = std::vector<double>;

Check make_check(std::string name, bool pass, json evidence = json::object()) {
  return {std::move(name), pass, std::move(evidence)};
}

json report_json(const MonteCarloReport& r) { return {{"estimate", r.estimate}, {"std_error", r.std_error}}; }

PathSpec path_spec(std::vector<double> alphas, std::vector<double> x0, Scheme scheme, double dt, double horizon,
                   std::size_t n, std::uint64_t seed, std::uint64_t s, double epsilon = 0.0) {
  PathSpec p;
  p.model = ModelSpec::constant_coefficients(std::move(alphas), 1.0, 0.0, epsilon);
  p.x0 = std::move(x0);
  p.scheme = scheme;
  p.dt = dt;
  p.horizon = horizon;
  p.n_paths = n;
  p.seed = seed;
  p.salt = s;
  return p;
}

double chapman_kolmogorov(const KernelParams& p, double s, double t, double x, double y) {
  auto pts = kernel_breakpoints(p, s, x);
  for (double q : kernel_breakpoints(p, t, y)) pts.push_back(q);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  auto f = [&](double z) { return z > 0.0 ? density_z(p, s, x, z) * density_z(p, t, z, y) : 0.0; };
  const QuadOptions opts{1e-15, 1e-11, 2000};
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    const auto r = pts[k] == 0.0 ? integrate_left_power(f, 0.0, pts[k + 1], -p.alpha, opts)
                                 : integrate(f, pts[k], pts[k + 1], opts);
    total += value_or_throw(r, "chapman-kolmogorov");
  }
  return total;
}

// ------------------------------------------------------------------ 1 kernel

void kernel_exactness(const json& c, std::uint64_t seed, CriterionResult& out) {
  const auto alphas = at<Doubles>(c, "alphas");
  const auto n = at<std::size_t>(c, "n_triples");
  json scale_ev, norm_ev, ck_ev;
  double scale_worst = 0.0, norm_worst = 0.0, ck_worst = 0.0;
  for (std::size_t ia = 0; ia < alphas.size(); ++ia) {
    const auto p = kernel_params(alphas[ia]);
    Rng rng({seed, salt(1, ia)});
    double worst = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double t = std::pow(10.0, -3.0 + 4.5 * rng.uniform());
      const double x = std::pow(10.0, -3.0 + 4.5 * rng.uniform());
      const double y = std::pow(10.0, -3.0 + 4.5 * rng.uniform());
      const double s = std::pow(t, -p.scaling_exponent());
      const double lhs = density_z(p, t, x, y);
      if (lhs > 1e-290) worst = std::max(worst, rel(lhs, s * density_z(p, 1.0, x * s, y * s)));
    }
    scale_ev[std::to_string(alphas[ia])] = worst;
    scale_worst = std::max(scale_worst, worst);

    worst = 0.0;
    for (double t : at<Doubles>(c, "norm_times")) {
      for (double x : at<Doubles>(c, "norm_starts")) worst = std::max(worst, std::abs(kernel_mass(p, t, x) - 1.0));
    }
    norm_ev[std::to_string(alphas[ia])] = worst;
    norm_worst = std::max(norm_worst, worst);

    worst = 0.0;
    for (double s : at<Doubles>(c, "ck_times")) {
      const double t = 0.5 * s + 0.2;
      for (double x : at<Doubles>(c, "ck_starts")) {
        for (double y : at<Doubles>(c, "ck_ends")) {
          const double direct = density_z(p, s + t, x, y);
          if (direct < 1e-200) continue;
          worst = std::max(worst, rel(chapman_kolmogorov(p, s, t, x, y), direct));
        }
      }
    }
    ck_ev[std::to_string(alphas[ia])] = worst;
    ck_worst = std::max(ck_worst, worst);
  }
  const double st = at<double>(c, "scaling_tol"), nt = at<double>(c, "norm_tol"), ct = at<double>(c, "ck_tol");
  out.checks.push_back(make_check("scaling law on random triples", scale_worst <= st,
                                  {{"worst_rel", scale_ev}, {"tol", st}, {"triples", n}}));
  out.checks.push_back(make_check("normalization", norm_worst <= nt, {{"worst_abs", norm_ev}, {"tol", nt}}));
  out.checks.push_back(make_check("Chapman-Kolmogorov", ck_worst <= ct, {{"worst_rel", ck_ev}, {"tol", ct}}));
}

// ----------------------------------------------------------------- 2 sampler

void sampler_exactness(const json& c, std::uint64_t seed, CriterionResult& out) {
  const auto n = at<std::size_t>(c, "n_draws");
  const double level = at<double>(c, "level");
  json rows = json::array();
  bool all = true;
  std::uint64_t combo = 0;
  for (double alpha : at<Doubles>(c, "alphas")) {
    const auto p = kernel_params(alpha);
    for (double x0 : at<Doubles>(c, "starts")) {
      for (double t : at<Doubles>(c, "times")) {
        const KernelCdf cdf(p, t, x0);
        std::vector<double> xs(n);
        const std::uint64_t s = salt(2, combo++);
        parallel_for(n, [&](std::size_t i) {
          Rng rng(path_stream(seed, s, i));
          xs[i] = sample_z(p, t, x0, rng);
        }, 1024);
        const double d = ks_statistic(xs, [&](double y) { return cdf(y); });
        const double pv = ks_pvalue(d, static_cast<double>(n));
        all = all && pv > level;
        rows.push_back({{"alpha", alpha}, {"x0", x0}, {"t", t}, {"ks", d}, {"p_value", pv}});
      }
    }
  }
  out.checks.push_back(make_check("KS against the quadrature distribution function", all,
                                  {{"level", level}, {"n_draws", n}, {"combinations", rows}}));
}

// -------------------------------------------------------------- 3 occupation

void occupation(const json& c, std::uint64_t seed, CriterionResult& out) {
  const auto etas = at<Doubles>(c, "etas");
  const double K = at<double>(c, "K"), x0 = at<double>(c, "x0"), tol = at<double>(c, "slope_tol");
  const double horizon = at<double>(c, "horizon");
  std::uint64_t sub = 0;
  for (double alpha : at<Doubles>(c, "alphas")) {
    const auto spec = path_spec({alpha}, {x0}, Scheme::exact, at<double>(c, "dt"), horizon, at<std::size_t>(c, "n_paths"),
                                seed, salt(3, sub++));
    const auto r = occupation_time(spec, etas, K);
    Doubles est;
    json reports = json::array();
    for (const auto& rep : r.reports[0]) {
      est.push_back(rep.estimate);
      reports.push_back(report_json(rep));
    }
    const auto fit = loglog_fit(etas, est);
    out.checks.push_back(make_check("occupation slope alpha=" + std::to_string(alpha),
                                    std::abs(fit.slope - (1.0 - alpha)) <= tol,
                                    {{"alpha", alpha},
                                     {"slope", fit.slope},
                                     {"expected", 1.0 - alpha},
                                     {"tol", tol},
                                     {"r2", fit.r2},
                                     {"etas", etas},
                                     {"occupation", reports},
                                     {"exit_time", report_json(r.exit_time)},
                                     {"censored_fraction", r.censored_fraction},
                                     {"n_paths", spec.n_paths},
                                     {"dt", spec.dt}}));
  }

  // Uniformity in epsilon: the envelope c2(eps) = max_eta E occ / eta^{1-alpha}
  // of the regularized model may not exceed the unregularized one.
  const auto& u = c.at("uniformity");
  const double alpha = at<double>(u, "alpha");
  const auto eps = at<Doubles>(u, "epsilons");
  json rows = json::array();
  Doubles env, env_se;
  for (std::size_t k = 0; k < eps.size(); ++k) {
    auto spec = path_spec({alpha}, {x0}, Scheme::euler, at<double>(u, "dt"), horizon, at<std::size_t>(u, "n_paths"),
                          seed, salt(3, 100 + k), eps[k]);
    const auto r = occupation_time(spec, etas, K);
    double best = -1.0, best_se = 0.0;
    json per = json::array();
    for (std::size_t j = 0; j < etas.size(); ++j) {
      const double sc = std::pow(etas[j], 1.0 - alpha);
      per.push_back(report_json(r.reports[0][j]));
      if (r.reports[0][j].estimate / sc > best) {
        best = r.reports[0][j].estimate / sc;
        best_se = r.reports[0][j].std_error / sc;
      }
    }
    env.push_back(best);
    env_se.push_back(best_se);
    rows.push_back({{"epsilon", eps[k]}, {"envelope", best}, {"envelope_se", best_se}, {"occupation", per}});
  }
  bool ok = true;
  for (std::size_t k = 1; k < eps.size(); ++k) ok = ok && env[k] <= env[0] + 3.0 * combined_se(env_se[k], env_se[0]);
  out.checks.push_back(make_check("epsilon-uniform occupation constant", ok,
                                  {{"alpha", alpha}, {"scheme", "euler"}, {"dt", at<double>(u, "dt")}, {"rows", rows}}));
}

// ------------------------------------------------------------- 4 upcrossings

void upcrossing_geometry(const json& c, std::uint64_t seed, CriterionResult& out) {
  auto gammas = at<Doubles>(c, "gammas");
  const double K = at<double>(c, "K");
  const std::size_t n_real = gammas.size();
  gammas.push_back(1.25 * K);
  const auto spec = path_spec({at<double>(c, "alpha")}, {at<double>(c, "x0")}, Scheme::exact, at<double>(c, "dt"),
                              at<double>(c, "horizon"), at<std::size_t>(c, "n_paths"), seed, salt(4, 0));
  const auto curves = upcrossings(spec, gammas, K, 0, at<double>(c, "floor_fraction"));
  const double r2_min = at<double>(c, "r2_min");
  const auto min_count = at<std::size_t>(c, "min_count");
  json rows = json::array();
  bool linear = true, increasing = true;
  double prev = 0.0;
  for (std::size_t j = 0; j < n_real; ++j) {
    const auto fit = fit_log_survival(curves[j], min_count);
    linear = linear && fit.r2 > r2_min;
    if (j > 0) increasing = increasing && std::abs(fit.slope) > prev;
    prev = std::abs(fit.slope);
    const double q = (K - gammas[j]) / (K - curves[j].floor);
    rows.push_back({{"gamma", gammas[j]},
                    {"floor", curves[j].floor},
                    {"slope", fit.slope},
                    {"slope_se", fit.slope_se},
                    {"r2", fit.r2},
                    {"scale_function_slope", std::log(q)},
                    {"mean_count", curves[j].mean_count},
                    {"levels_fitted", std::count_if(curves[j].exceed.begin(), curves[j].exceed.end(),
                                                    [&](std::size_t e) { return e >= min_count; })}});
  }
  out.checks.push_back(make_check("log-survival linear in m", linear, {{"r2_min", r2_min}, {"curves", rows}}));
  out.checks.push_back(make_check("slope magnitude increasing in gamma", increasing, {{"curves", rows}}));
  out.checks.push_back(make_check("gamma above K has no upcrossings", curves.back().survival[0] == 0.0,
                                  {{"gamma", gammas.back()}, {"survival_0", curves.back().survival[0]}}));
}

// ------------------------------------------------------------------ 5 Krylov

void krylov(const json& c, std::uint64_t seed, CriterionResult& out) {
  const double alpha = at<double>(c, "alpha"), lambda = at<double>(c, "lambda");
  const double horizon = std::log(1e6) / lambda + at<double>(c, "horizon_margin");
  const auto radii = at<Doubles>(c, "radii");
  const auto n = at<std::size_t>(c, "n_paths");
  const auto spec = path_spec({alpha}, {at<double>(c, "box_x0")}, Scheme::exact, at<double>(c, "dt"), horizon, n,
                              seed, salt(5, 0));
  std::vector<TestFunctionSpec> fs;
  for (double r : radii) fs.push_back(TestFunctionSpec::indicator({0.0}, {r}));
  fs.push_back(TestFunctionSpec::bump({0.2}, {1.2}, 0.0));
  const Eigen::MatrixXd m = discounted_functionals(spec, lambda, fs);
  auto col_stats = [&](const Eigen::VectorXd& v) {
    RunningStats s;
    for (Eigen::Index i = 0; i < v.size(); ++i) s.add(v(i));
    return s;
  };
  json rows = json::array();
  Doubles est, meas;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    const auto s = col_stats(m.col(static_cast<Eigen::Index>(k)));
    est.push_back(s.mean());
    meas.push_back(radii[k]);
    rows.push_back({{"r", radii[k]}, {"estimate", s.mean()}, {"std_error", s.std_error()}});
  }
  bool monotone = true;
  for (std::size_t k = 0; k + 1 < radii.size(); ++k) {
    const auto d = col_stats(m.col(static_cast<Eigen::Index>(k)) - m.col(static_cast<Eigen::Index>(k + 1)));
    monotone = monotone && d.mean() >= -3.0 * d.std_error();
  }
  const auto first_last = col_stats(m.col(0) - m.col(static_cast<Eigen::Index>(radii.size() - 1)));
  const auto fit = loglog_fit(meas, est);
  const bool to_zero = fit.slope > 0.0 && first_last.mean() > 3.0 * first_last.std_error();
  out.checks.push_back(make_check("shrinking boxes decrease", monotone, {{"boxes", rows}}));
  out.checks.push_back(make_check("estimates tend to zero with the box", to_zero,
                                  {{"loglog_exponent", fit.slope},
                                   {"drop", first_last.mean()},
                                   {"drop_se", first_last.std_error()}}));
  const double zero = m.col(static_cast<Eigen::Index>(radii.size())).cwiseAbs().maxCoeff();
  out.checks.push_back(make_check("zero function gives zero", zero == 0.0, {{"max_abs", zero}}));

  const auto& mt = c.at("match");
  const double lo = at<double>(mt, "lo"), hi = at<double>(mt, "hi"), x0 = at<double>(mt, "x0");
  const auto mspec = path_spec({alpha}, {x0}, Scheme::exact, at<double>(c, "dt"), horizon, n, seed, salt(5, 1));
  const auto f = TestFunctionSpec::indicator({lo}, {hi});
  const auto rep = krylov_functional(mspec, lambda, f);
  const double ref = resolvent_point(kernel_params(alpha), lambda, [](double) { return 1.0; }, x0, lo, hi);
  const double bias = rep.parameters["tail_bias_bound"].get<double>();
  out.checks.push_back(make_check("Monte Carlo matches the resolvent quadrature",
                                  std::abs(rep.estimate - ref) <= 3.0 * rep.std_error + bias,
                                  {{"estimate", rep.estimate},
                                   {"std_error", rep.std_error},
                                   {"quadrature", ref},
                                   {"tail_bias_bound", bias},
                                   {"f_l2_norm", rep.parameters["f_lp_norm"]}}));
}

// ------------------------------------------------------ 6 derivative bounds

void derivative_bounds(const json& c, std::uint64_t, CriterionResult& out) {
  const double lo = at<double>(c, "x_min"), hi = at<double>(c, "x_max");
  const auto grid = log_grid(lo, hi, at<std::size_t>(c, "points"));
  const auto fine = log_grid(lo, hi, at<std::size_t>(c, "fine_points"));
  const double stab = at<double>(c, "stability_tol"), rtol = at<double>(c, "ratio_tol");
  bool finite = true, stable = true, ratio = true;
  json rows = json::array();
  for (double alpha : at<Doubles>(c, "alphas")) {
    const auto p = kernel_params(alpha);
    const auto b1 = kernel_deriv_bounds(p, 1.0, grid);
    const auto b4 = kernel_deriv_bounds(p, 0.25, grid);
    const auto bf = kernel_deriv_bounds(p, 1.0, fine);
    const double expected = std::pow(4.0, p.scaling_exponent());
    const double r1 = b4.sup_dx_integral / b1.sup_dx_integral, r2 = b4.sup_weighted_dual / b1.sup_weighted_dual;
    const double g1 = rel(bf.sup_dx_integral, b1.sup_dx_integral), g2 = rel(bf.sup_weighted_dual, b1.sup_weighted_dual);
    finite = finite && std::isfinite(b1.sup_dx_integral) && std::isfinite(b1.sup_weighted_dual) &&
             std::isfinite(b4.sup_dx_integral) && std::isfinite(b4.sup_weighted_dual);
    stable = stable && g1 <= stab && g2 <= stab;
    ratio = ratio && rel(r1, expected) <= rtol && rel(r2, expected) <= rtol;
    rows.push_back({{"alpha", alpha},
                    {"sup_dx_integral", b1.sup_dx_integral},
                    {"sup_weighted_dual", b1.sup_weighted_dual},
                    {"argmax_x", b1.argmax_x},
                    {"argmax_y", b1.argmax_y},
                    {"refinement_rel", {g1, g2}},
                    {"ratio_quarter", {r1, r2}},
                    {"expected_ratio", expected}});
  }
  out.checks.push_back(make_check("suprema finite", finite, {{"rows", rows}}));
  out.checks.push_back(make_check("suprema grid-stable", stable, {{"tol", stab}}));
  out.checks.push_back(make_check("time scaling ratio", ratio, {{"tol", rtol}}));
}

// --------------------------------------------------------- 7 operator norms

void operator_norms(const json& c, std::uint64_t, CriterionResult& out) {
  const double alpha = at<double>(c, "alpha");
  const auto g = std::make_shared<const Grid1D>(alpha, at<std::size_t>(c, "nodes"), at<double>(c, "x_max"));
  const OperatorEngine e({g});
  const auto p = g->params();
  const double inv2b = p.scaling_exponent();
  auto dilated = [&](double s) {
    return GridFunction::sample({g}, [&](std::span<const double> x) { return bump(x[0], 1.5 * s, s); });
  };
  std::vector<GridFunction> family;
  Doubles widths;
  for (int k = at<int>(c, "dilation_k_min"); k <= at<int>(c, "dilation_k_max"); ++k) {
    widths.push_back(std::pow(2.0, -k / 4.0));
    family.push_back(dilated(widths.back()));
  }
  auto sup_over = [&](const std::function<NormReport(const GridFunction&)>& op) {
    double best = 0.0, arg = 0.0;
    for (std::size_t k = 0; k < family.size(); ++k) {
      const double r = op(family[k]).ratio;
      if (r > best) {
        best = r;
        arg = widths[k];
      }
    }
    return std::pair{best, arg};
  };

  const auto ts = at<Doubles>(c, "times");
  Doubles sups;
  json trows = json::array();
  for (double t : ts) {
    const auto [s, arg] = sup_over([&](const GridFunction& f) { return first_deriv_norm(e, t, 2.0, f); });
    sups.push_back(s);
    trows.push_back({{"t", t}, {"sup", s}, {"argmax_width", arg}});
  }
  const auto tfit = loglog_fit(ts, sups);
  const double etol = at<double>(c, "exponent_tol");
  out.checks.push_back(make_check("first-derivative scaling exponent", std::abs(tfit.slope + inv2b) <= etol,
                                  {{"slope", tfit.slope}, {"expected", -inv2b}, {"tol", etol}, {"rows", trows}}));

  const auto ls = at<Doubles>(c, "lambdas");
  Doubles scaled;
  json lrows = json::array();
  for (double l : ls) {
    const auto [s, arg] = sup_over([&](const GridFunction& f) { return resolvent_deriv_norm(e, l, 2.0, f); });
    scaled.push_back(s / std::pow(l, inv2b - 1.0));
    lrows.push_back({{"lambda", l}, {"sup", s}, {"scaled", scaled.back()}, {"argmax_width", arg}});
  }
  const double rtol = at<double>(c, "resolvent_tol");
  bool within = true;
  for (double v : scaled) within = within && rel(v, scaled.front()) <= rtol;
  out.checks.push_back(make_check("resolvent-derivative scaling", within,
                                  {{"expected_exponent", inv2b - 1.0}, {"tol", rtol}, {"rows", lrows}}));

  Doubles ar, gr;
  json brows = json::array();
  const double s0 = at<double>(c, "bump_width0"), shrink = at<double>(c, "bump_shrink");
  for (int k = 0; k < at<int>(c, "bumps"); ++k) {
    const double s = s0 * std::pow(shrink, k);
    const auto f = dilated(s);
    ar.push_back(second_order_apply(e, 0, 1.0, 2.0, f).second.ratio);
    gr.push_back(g_function_norm(e, 2.0, f).ratio);
    brows.push_back({{"width", s}, {"second_order_resolvent", ar.back()}, {"g_function", gr.back()}});
  }
  const double gtol = at<double>(c, "growth_tol");
  auto bounded = [&](const Doubles& v, double cap) {
    const double mx = *std::max_element(v.begin(), v.end());
    const double tail = v[v.size() - 1] - v[v.size() - 2];
    return std::pair{mx <= cap && tail <= gtol, json{{"max", mx}, {"cap", cap}, {"last_increment", tail}}};
  };
  // On L^2(mu) the spectral calculus gives ||A R_1|| <= 1 and ||G f|| = ||f|| / sqrt 2.
  const double slack = 1.0 + at<double>(c, "cap_slack");
  const auto [a_ok, a_ev] = bounded(ar, slack);
  const auto [g_ok, g_ev] = bounded(gr, slack / std::sqrt(2.0));
  out.checks.push_back(make_check("second-order resolvent bounded over the bump family", a_ok,
                                  {{"ratios", a_ev}, {"growth_tol", gtol}, {"rows", brows}}));
  out.checks.push_back(make_check("square function bounded over the bump family", g_ok,
                                  {{"ratios", g_ev}, {"growth_tol", gtol}}));
}

// ------------------------------------------------------ 8 scheme consistency

void scheme_consistency(const json& c, std::uint64_t seed, CriterionResult& out) {
  const double alpha = at<double>(c, "alpha"), x0 = at<double>(c, "x0"), T = at<double>(c, "horizon");
  const auto dts = at<Doubles>(c, "dts");
  const auto n = at<std::size_t>(c, "n_paths"), nref = at<std::size_t>(c, "n_reference");
  const auto model = ModelSpec::constant_coefficients({alpha});
  const std::vector<double> start{x0};
  const auto euler = coupled_euler_terminal(model, start, T, dts, n, seed, salt(8, 0));
  const auto ref = exact_terminal(alpha, x0, T, nref, seed, salt(8, 1));
  Doubles w;
  for (const auto& e : euler) w.push_back(wasserstein1(e, ref));
  const auto reps = at<std::size_t>(c, "floor_replicates");
  double floor = 0.0;
  for (std::size_t r = 0; r < reps; ++r) floor += wasserstein1(exact_terminal(alpha, x0, T, n, seed, salt(8, 2 + r)), ref);
  floor /= static_cast<double>(reps);
  // Steps are listed coarse to fine.
  bool decreasing = true;
  for (std::size_t k = 1; k < w.size(); ++k) decreasing = decreasing && w[k] < w[k - 1];
  out.checks.push_back(make_check("W1 decreasing in dt", decreasing, {{"dts", dts}, {"w1", w}}));
  out.checks.push_back(make_check("finest step within 3x noise floor", w.back() < 3.0 * floor,
                                  {{"w1_finest", w.back()}, {"noise_floor", floor}, {"n_paths", n}, {"n_reference", nref}}));
}

// ----------------------------------------------------- 9 defining properties

void defining_properties(const json& c, std::uint64_t seed, CriterionResult& out) {
  {
    const auto& b = c.at("boundary");
    const auto alphas = at<Doubles>(b, "alphas");
    const auto tols = at<Doubles>(b, "tols");
    const auto spec = path_spec(alphas, at<Doubles>(b, "x0"), Scheme::exact, at<double>(b, "dt"),
                                at<double>(b, "horizon"), at<std::size_t>(b, "n_paths"), seed, salt(9, 0));
    const auto reps = boundary_time(spec, tols);
    Doubles est;
    json rows = json::array();
    bool decreasing = true;
    for (std::size_t k = 0; k < reps.size(); ++k) {
      est.push_back(reps[k].estimate);
      rows.push_back({{"tol", tols[k]}, {"estimate", reps[k].estimate}, {"std_error", reps[k].std_error}});
      if (k > 0) decreasing = decreasing && est[k] < est[k - 1];
    }
    const auto fit = loglog_fit(tols, est);
    const double need = (1.0 - *std::max_element(alphas.begin(), alphas.end())) - at<double>(b, "exponent_slack");
    out.checks.push_back(make_check("boundary time decreasing in tol", decreasing && fit.slope >= need,
                                    {{"exponent", fit.slope}, {"required", need}, {"rows", rows}}));
  }
  {
    const auto& s = c.at("submartingale");
    const double alpha = at<double>(s, "alpha");
    const auto spec = path_spec({alpha}, {at<double>(s, "x0")}, Scheme::exact, at<double>(s, "dt"),
                                at<double>(s, "t"), at<std::size_t>(s, "n_paths"), seed, salt(9, 1));
    const double s0 = at<double>(s, "s"), t1 = at<double>(s, "t");
    const std::vector<WeightFactor> none;
    const std::vector<WeightFactor> weights{{TestFunctionSpec::bump({-0.5}, {1.0}), 0.2},
                                            {TestFunctionSpec::bump({0.1}, {2.1}), 0.4}};
    struct Case {
      std::string name;
      TestFunctionSpec f;
      const std::vector<WeightFactor>* w;
    };
    const std::vector<Case> cases{
        {"interior bump", TestFunctionSpec::bump({0.3}, {1.7}), &none},
        {"bump with positive face slope", TestFunctionSpec::bump({-0.6}, {1.4}), &none},
        {"coordinate-monotone", TestFunctionSpec::coordinate_monotone(1, 0, 1.0), &none},
        {"coordinate-monotone with weights", TestFunctionSpec::coordinate_monotone(1, 0, 1.0), &weights},
    };
    bool ok = true;
    json rows = json::array();
    for (const auto& k : cases) {
      const auto rep = submartingale_check(spec, k.f, s0, t1, *k.w);
      ok = ok && rep.parameters["pass"].get<bool>();
      rows.push_back({{"f", k.name}, {"gap", rep.estimate}, {"std_error", rep.std_error}});
    }
    out.checks.push_back(make_check("submartingale gap >= -3 standard errors", ok, {{"cases", rows}}));
  }
  {
    const auto& th = c.at("theta");
    const double alpha = at<double>(th, "alpha"), lambda = at<double>(th, "lambda"), x0 = at<double>(th, "x0");
    const double horizon = std::log(1e6) / lambda + 0.05;
    const auto n = at<std::size_t>(th, "n_paths");
    const auto reps = at<std::size_t>(th, "bootstrap");
    const auto fam = theta_family(1, at<double>(th, "M"), at<double>(th, "p0"));
    const double dt_exact = at<double>(th, "dt_exact");
    const auto a = path_spec({alpha}, {x0}, Scheme::exact, dt_exact, horizon, n, seed, salt(9, 10));
    auto a2 = path_spec({alpha}, {x0}, Scheme::exact, dt_exact, horizon, n, seed, salt(9, 11));
    const auto seeds = uniqueness_theta(a, a2, lambda, fam, false, reps, seed);
    out.checks.push_back(make_check("theta zero across seeds", seeds.zero_consistent, seeds.to_json()));

    auto eu = path_spec({alpha}, {x0}, Scheme::euler, at<double>(th, "dt_euler"), horizon, n, seed, salt(9, 12));
    eu.stride = static_cast<std::size_t>(std::llround(dt_exact / eu.dt));
    const auto ee = uniqueness_theta(a, eu, lambda, fam, false, reps, seed);
    out.checks.push_back(make_check("theta zero exact vs Euler", ee.zero_consistent, ee.to_json()));

    const auto eps = at<Doubles>(th, "epsilons");
    const double dt = at<double>(th, "dt_trend");
    const auto base = path_spec({alpha}, {x0}, Scheme::euler, dt, horizon, n, seed, salt(9, 13));
    Doubles thetas;
    json rows = json::array();
    bool decreasing = true;
    for (double e : eps) {
      auto reg = path_spec({alpha}, {x0}, Scheme::euler, dt, horizon, n, seed, salt(9, 13), e);
      const auto r = uniqueness_theta(reg, base, lambda, fam, true, reps, seed);
      if (!thetas.empty()) decreasing = decreasing && r.theta < thetas.back();
      thetas.push_back(r.theta);
      rows.push_back({{"epsilon", e}, {"theta", r.theta}, {"bootstrap_se", r.bootstrap_se}});
    }
    out.checks.push_back(make_check("theta decreasing in epsilon", decreasing, {{"rows", rows}}));
  }
}

using Runner = void (*)(const json&, std::uint64_t, CriterionResult&);

struct Entry {
  const char* title;
  Runner run;
};

const Entry kEntries[] = {
    {"kernel exactness", kernel_exactness},
    {"sampler exactness", sampler_exactness},
    {"occupation exponent", occupation},
    {"upcrossing geometry", upcrossing_geometry},
    {"Krylov functional", krylov},
    {"kernel derivative bounds", derivative_bounds},
    {"operator norms", operator_norms},
    {"scheme consistency", scheme_consistency},
    {"defining properties", defining_properties},
};

}  // namespace

bool CriterionResult::pass() const {
  if (!error.empty() || checks.empty()) return false;
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

json CriterionResult::to_json() const {
  json cs = json::array();
  for (const auto& c : checks) cs.push_back({{"name", c.name}, {"pass", c.pass}, {"evidence", c.evidence}});
  json j = {{"criterion", id}, {"title", title}, {"pass", pass()}, {"checks", cs}};
  if (!error.empty()) {
    j["error"] = error;
    j["numerical_failure"] = numerical_failure;
  }
  return j;
}

std::string criterion_title(int id) {
  if (id < 1 || id > 9) throw std::invalid_argument("criterion id must be in 1..9");
  return kEntries[id - 1].title;
}

json default_verify_settings() {
  return json::parse(R"({
  "criteria": [1, 2, 3, 4, 5, 6, 7, 8, 9],
  "c1": {"alphas": [0.3, 0.5, 0.7], "n_triples": 1000, "scaling_tol": 1e-12, "norm_tol": 1e-8, "ck_tol": 1e-6,
         "norm_times": [0.001, 0.1, 1.0, 10.0], "norm_starts": [0.0, 0.0001, 0.1, 1.0, 5.0, 30.0],
         "ck_times": [0.1, 0.3, 0.7, 1.5, 3.0], "ck_starts": [0.0, 0.2, 0.8, 1.6, 3.0],
         "ck_ends": [0.05, 0.5, 1.0, 2.0, 3.5]},
  "c2": {"alphas": [0.3, 0.5, 0.7], "starts": [0.0, 1.0], "times": [0.25, 1.0], "n_draws": 100000, "level": 0.01},
  "c3": {"alphas": [0.3, 0.5, 0.7], "x0": 0.5, "K": 2.0, "etas": [0.4, 0.2, 0.1, 0.05], "dt": 1e-4,
         "n_paths": 100000, "horizon": 200.0, "slope_tol": 0.1,
         "uniformity": {"alpha": 0.5, "epsilons": [0.0, 0.05], "dt": 1e-4, "n_paths": 25000}},
  "c4": {"alpha": 0.5, "x0": 0.0, "K": 2.0, "gammas": [0.05, 0.1, 0.2], "floor_fraction": 0.2, "dt": 1e-4,
         "horizon": 400.0, "n_paths": 20000, "min_count": 100, "r2_min": 0.95},
  "c5": {"alpha": 0.5, "lambda": 1.0, "dt": 0.01, "horizon_margin": 0.5, "n_paths": 100000, "box_x0": 0.5,
         "radii": [0.4, 0.2, 0.1, 0.05, 0.025], "match": {"x0": 1.0, "lo": 0.5, "hi": 1.5}},
  "c6": {"alphas": [0.3, 0.5, 0.7], "x_min": 1e-4, "x_max": 20.0, "points": 200, "fine_points": 400,
         "stability_tol": 0.01, "ratio_tol": 0.05},
  "c7": {"alpha": 0.5, "nodes": 400, "x_max": 20.0, "dilation_k_min": -8, "dilation_k_max": 20,
         "times": [1.0, 0.25, 0.0625], "lambdas": [1.0, 4.0, 16.0], "exponent_tol": 0.05, "resolvent_tol": 0.1,
         "bumps": 10, "bump_width0": 2.0, "bump_shrink": 0.7, "cap_slack": 0.05,
         "growth_tol": 0.05},
  "c8": {"alpha": 0.5, "x0": 1.0, "horizon": 1.0, "dts": [0.01, 0.001, 0.0001], "n_paths": 100000,
         "n_reference": 1000000, "floor_replicates": 4},
  "c9": {"boundary": {"alphas": [0.3, 0.5], "x0": [0.5, 0.5], "horizon": 2.0, "dt": 1e-4, "n_paths": 10000,
                      "tols": [0.1, 0.05, 0.025], "exponent_slack": 0.15},
         "submartingale": {"alpha": 0.5, "x0": 0.3, "s": 0.5, "t": 1.0, "dt": 1e-3, "n_paths": 20000},
         "theta": {"alpha": 0.5, "x0": 1.0, "lambda": 2.0, "M": 3.0, "p0": 2.0, "n_paths": 10000,
                   "dt_exact": 1e-3, "dt_euler": 1e-4, "dt_trend": 1e-3, "epsilons": [0.2, 0.1, 0.05],
                   "bootstrap": 200}}
})");
}

CriterionResult run_criterion(int id, const json& settings, std::uint64_t seed) {
  CriterionResult r;
  r.id = id;
  r.title = criterion_title(id);
  const auto start = std::chrono::steady_clock::now();
  try {
    kEntries[id - 1].run(settings.at("c" + std::to_string(id)), seed, r);
  } catch (const numerical_failure& e) {
    r.error = e.what();
    r.numerical_failure = true;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

std::vector<CriterionResult> run_verify(const json& settings, std::uint64_t seed,
                                        const std::function<void(const CriterionResult&)>& progress) {
  std::vector<CriterionResult> out;
  for (int id : settings.at("criteria").get<std::vector<int>>()) {
    out.push_back(run_criterion(id, settings, seed));
    if (progress) progress(out.back());
  }
  return out;
}

}  // namespace degdiff
