#include <doctest.h>

#include <cmath>
#include <vector>

#include "degdiff/estimators.hpp"
#include "degdiff/kernel.hpp"
#include "degdiff/operators.hpp"

using namespace degdiff;

namespace {

PathSpec exact_spec(std::vector<double> alphas, std::vector<double> x0, double dt, double horizon, std::size_t n,
                    std::uint64_t seed) {
  PathSpec s;
  s.model = ModelSpec::constant_coefficients(std::move(alphas));
  s.x0 = std::move(x0);
  s.scheme = Scheme::exact;
  s.dt = dt;
  s.horizon = horizon;
  s.n_paths = n;
  s.seed = seed;
  return s;
}

// Reflecting at 0, absorbed at K, generator x^alpha f'': E_x T_K and the
// Green-function occupation of [0, eta] for eta <= x.
double exit_time_oracle(double alpha, double x, double K) {
  return (std::pow(K, 2.0 - alpha) - std::pow(x, 2.0 - alpha)) / ((1.0 - alpha) * (2.0 - alpha));
}
double occupation_oracle(double alpha, double x, double K, double eta) {
  return (K - x) * std::pow(eta, 1.0 - alpha) / (1.0 - alpha);
}

}  // namespace

TEST_CASE("path spec validation") {
  auto s = exact_spec({0.5}, {1.0}, 1e-2, 1.0, 10, 1);
  CHECK_NOTHROW(s.validate());
  CHECK(s.observations() == 100);
  s.model.epsilon = 0.1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = exact_spec({0.5}, {-1.0}, 1e-2, 1.0, 10, 1);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = exact_spec({0.5}, {1.0}, 1e-2, 1.0, 10, 1);
  s.model.drift[0] = CoefficientField::constant(0.5);
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.scheme = Scheme::euler;
  CHECK_NOTHROW(s.validate());
  CHECK(s.to_json()["scheme"] == "euler");
}

TEST_CASE("cursor units round trip and paths are reproducible") {
  auto s = exact_spec({0.3, 0.7}, {0.5, 1.5}, 1e-2, 1.0, 4, 9);
  PathCursor a(s, 2), b(s, 2), c(s, 3);
  for (std::size_t i = 0; i < 2; ++i) CHECK(a.from_raw(i, a.to_raw(i, 0.8)) == doctest::Approx(0.8));
  CHECK(a.state()[1] == doctest::Approx(1.5));
  int steps = 0;
  while (a.advance()) {
    b.advance();
    c.advance();
    ++steps;
    CHECK(a.state()[0] == b.state()[0]);
    CHECK(a.state()[1] == b.state()[1]);
  }
  CHECK(steps == 100);
  CHECK(a.time() == doctest::Approx(1.0));
  CHECK(a.state()[0] != c.state()[0]);
}

TEST_CASE("crossing fraction") {
  CHECK(crossing_fraction(0.0, 2.0, 1.0) == doctest::Approx(0.5));
  CHECK(crossing_fraction(0.0, 2.0, 3.0) == 1.0);
  CHECK(crossing_fraction(1.0, 1.0, 1.0) == 1.0);
}

TEST_CASE("test function derivatives match finite differences") {
  const auto f = TestFunctionSpec::bump({0.4, 0.1}, {1.6, 0.9}, 2.0);
  const auto g = TestFunctionSpec::coordinate_monotone(2, 1, 0.7);
  const std::vector<double> x{0.8, 0.6};
  const double h = 1e-5;
  for (const auto* fn : {&f, &g}) {
    for (std::size_t i = 0; i < 2; ++i) {
      auto xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd1 = (fn->value(xp) - fn->value(xm)) / (2 * h);
      const double fd2 = (fn->value(xp) - 2 * fn->value(x) + fn->value(xm)) / (h * h);
      CHECK(fn->d1(i, x) == doctest::Approx(fd1).epsilon(1e-6));
      CHECK(fn->d2(i, x) == doctest::Approx(fd2).epsilon(1e-3));
    }
  }
  const auto m = ModelSpec::constant_coefficients({0.3, 0.6}, 1.5, 0.25);
  const double expect = 1.5 * (std::pow(0.8, 0.3) * f.d2(0, x) + std::pow(0.6, 0.6) * f.d2(1, x)) +
                        0.25 * (f.d1(0, x) + f.d1(1, x));
  CHECK(f.generator(m, x) == doctest::Approx(expect));
}

TEST_CASE("face certificates") {
  CHECK(TestFunctionSpec::bump({0.2}, {1.0}).certified());
  CHECK(TestFunctionSpec::bump({-1.0}, {1.0}).faces[0] == FaceSign::zero);
  CHECK(TestFunctionSpec::bump({-0.5}, {1.5}).faces[0] == FaceSign::nonnegative);
  CHECK(TestFunctionSpec::bump({-1.5}, {0.5}).faces[0] == FaceSign::negative);
  CHECK_FALSE(TestFunctionSpec::bump({-1.5}, {0.5}).certified());
  CHECK_FALSE(TestFunctionSpec::bump({-0.5}, {1.5}, -1.0).certified());
  CHECK_FALSE(TestFunctionSpec::indicator({0.0}, {1.0}).certified());
  CHECK(TestFunctionSpec::coordinate_monotone(3, 2, 1.0).certified());
}

TEST_CASE("test function norms") {
  const auto ind = TestFunctionSpec::indicator({0.0, 0.0}, {0.5, 2.0}, 3.0);
  CHECK(ind.lp_norm(2.0) == doctest::Approx(3.0));
  const auto b = TestFunctionSpec::bump({0.0}, {2.0});
  const double direct = lp_norm_point(0.0, 2.0, [](double x) { return bump(x, 1.0, 1.0); }, 0.0, 2.0);
  CHECK(b.lp_norm(2.0) == doctest::Approx(direct).epsilon(1e-9));
  CHECK(b.normalized(2.0).lp_norm(2.0) == doctest::Approx(1.0));
  const auto fam = theta_family(2, 4.0);
  CHECK(fam.size() == 20);
  for (const auto& f : fam) CHECK(f.lp_norm(2.0) == doctest::Approx(1.0));
}

TEST_CASE("occupation time and exit time agree with the Green function") {
  const double alpha = 0.5, x0 = 0.5, K = 2.0;
  auto s = exact_spec({alpha}, {x0}, 1e-3, 200.0, 4000, 21);
  const std::vector<double> etas{0.1, 0.4};
  const auto r = occupation_time(s, etas, K);
  CHECK(r.censored_fraction == 0.0);
  // Discrete monitoring of the exit at dt = 1e-3 overshoots K by about 4%.
  const double te = exit_time_oracle(alpha, x0, K);
  CAPTURE(r.exit_time.estimate);
  CHECK(std::abs(r.exit_time.estimate - te) < 4.0 * r.exit_time.std_error + 0.04 * te);
  for (std::size_t j = 0; j < etas.size(); ++j) {
    const auto& rep = r.reports[0][j];
    const double o = occupation_oracle(alpha, x0, K, etas[j]);
    CAPTURE(etas[j]);
    CAPTURE(rep.estimate);
    CHECK(std::abs(rep.estimate - o) < 4.0 * rep.std_error + 0.04 * o);
  }
}

TEST_CASE("occupation time refuses coarse grids") {
  auto s = exact_spec({0.5}, {0.5}, 1e-2, 10.0, 10, 1);
  const std::vector<double> etas{0.05};
  CHECK_THROWS_AS(occupation_time(s, etas, 2.0), std::invalid_argument);
}

TEST_CASE("upcrossing counts are geometric with the scale-function ratio") {
  const double K = 2.0, gamma = 0.5;
  auto s = exact_spec({0.5}, {0.0}, 1e-4, 200.0, 3000, 22);
  const std::vector<double> gs{gamma};
  const auto c = upcrossings(s, gs, K);
  REQUIRE(c.size() == 1);
  CHECK(c[0].exceed[0] == s.n_paths);
  for (std::size_t m = 1; m < c[0].survival.size(); ++m) CHECK(c[0].survival[m] <= c[0].survival[m - 1]);
  const double q = (K - gamma) / (K - 0.1 * gamma);
  const auto fit = fit_log_survival(c[0]);
  CAPTURE(fit.slope);
  CHECK(std::exp(fit.slope) == doctest::Approx(q).epsilon(0.03));
  CHECK(c[0].mean_count == doctest::Approx(1.0 / (1.0 - q)).epsilon(0.1));
}

TEST_CASE("discounted functional matches the pointwise resolvent") {
  const double lambda = 1.0, x0 = 1.0;
  auto s = exact_spec({0.5}, {x0}, 1e-2, std::log(1e6) / lambda + 0.5, 4000, 23);
  const auto f = TestFunctionSpec::bump({0.3}, {1.7});
  const auto rep = krylov_functional(s, lambda, f);
  const double ref = resolvent_point(kernel_params(0.5), lambda, [](double x) { return bump(x, 1.0, 0.7); }, x0, 0.3,
                                     1.7);
  CAPTURE(rep.estimate);
  CAPTURE(ref);
  CHECK(std::abs(rep.estimate - ref) < 4.0 * rep.std_error + 1e-3);
  CHECK(rep.parameters["tail_bias_bound"].get<double>() < 1e-6);
  auto short_horizon = s;
  short_horizon.horizon = 2.0;
  CHECK_THROWS_AS(krylov_functional(short_horizon, lambda, f), std::invalid_argument);
}

TEST_CASE("boundary time matches the distribution function") {
  const double alpha = 0.5, x0 = 0.5, tol = 0.1, T = 1.0;
  auto s = exact_spec({alpha}, {x0}, 1e-3, T, 4000, 24);
  s.stride = 3;
  const std::vector<double> tols{tol};
  const auto r = boundary_time(s, tols);
  const auto p = kernel_params(alpha);
  double expect = 0.0;
  const std::size_t N = s.observations();
  for (std::size_t k = 1; k <= N; ++k) expect += kernel_cdf(p, static_cast<double>(k) * s.observation_step(), x0, tol);
  expect /= static_cast<double>(N);
  CAPTURE(r[0].estimate);
  CAPTURE(expect);
  CHECK(std::abs(r[0].estimate - expect) < 4.0 * r[0].std_error);
}

TEST_CASE("martingale part of an interior bump has mean zero") {
  auto s = exact_spec({0.5}, {1.0}, 1e-3, 1.0, 4000, 25);
  const auto f = TestFunctionSpec::bump({0.5}, {1.5});
  const std::vector<double> times{0.5, 1.0};
  const auto M = martingale_values(s, f, times);
  for (Eigen::Index j = 0; j < M.cols(); ++j) {
    const double m = M.col(j).mean();
    const double se = std::sqrt((M.col(j).array() - m).square().sum() / (M.rows() - 1) / M.rows());
    CHECK(std::abs(m) < 4.0 * se);
  }
}

TEST_CASE("submartingale check") {
  auto s = exact_spec({0.5}, {0.2}, 1e-3, 1.0, 4000, 26);
  const auto f = TestFunctionSpec::coordinate_monotone(1, 0, 1.0);
  const auto rep = submartingale_check(s, f, 0.25, 1.0);
  CHECK(rep.parameters["pass"].get<bool>());
  CHECK(rep.estimate > 0.0);
  const std::vector<WeightFactor> w{{TestFunctionSpec::bump({0.0}, {0.8}), 0.1}};
  CHECK(submartingale_check(s, f, 0.25, 1.0, w).parameters["pass"].get<bool>());
  const std::vector<WeightFactor> late{{TestFunctionSpec::bump({0.0}, {0.8}), 0.5}};
  CHECK_THROWS_AS(submartingale_check(s, f, 0.25, 1.0, late), std::invalid_argument);
  CHECK_THROWS_AS(submartingale_check(s, TestFunctionSpec::bump({-1.5}, {0.5}), 0.25, 1.0), std::invalid_argument);
}

TEST_CASE("theta vanishes for identical batches and is noise-level across seeds") {
  auto a = exact_spec({0.5}, {1.0}, 1e-2, std::log(1e6) / 2.0 + 0.1, 1000, 27);
  const auto fam = theta_family(1, 3.0);
  const auto same = uniqueness_theta(a, a, 2.0, fam, true, 50);
  CHECK(same.theta == 0.0);
  CHECK(same.bootstrap_se == 0.0);
  auto b = a;
  b.seed = 28;
  const auto diff = uniqueness_theta(a, b, 2.0, fam, false, 50);
  CHECK(diff.theta > 0.0);
  CHECK(diff.bootstrap_se > 0.0);
  CHECK(diff.delta.size() == fam.size());
  CHECK(diff.max_abs_z < 4.5);
}

TEST_CASE("coupled Euler terminal values") {
  const auto m = ModelSpec::constant_coefficients({0.5});
  const std::vector<double> x0{1.0}, dts{1e-2, 1e-3};
  const auto out = coupled_euler_terminal(m, x0, 1.0, dts, 50, 29);
  REQUIRE(out.size() == 2);
  // The finest level consumes the stream exactly as a plain stepper does.
  for (std::size_t n = 0; n < 50; ++n) {
    Rng rng(path_stream(29, 0, n));
    EulerStepper st(m, x0, Projection::reflect);
    for (int k = 0; k < 1000; ++k) st.step(1e-3, rng);
    CHECK(out[1][n] == doctest::Approx(st.state()[0]).epsilon(1e-10));
  }
  const std::vector<double> bad{1e-2, 3e-3};
  CHECK_THROWS_AS(coupled_euler_terminal(m, x0, 1.0, bad, 5, 1), std::invalid_argument);
}

TEST_CASE("exact terminal draws have the kernel mean") {
  const auto p = kernel_params(0.3);
  const auto xs = exact_terminal(0.3, 1.0, 0.5, 40000, 30);
  const auto ms = mean_se(xs);
  CHECK(std::abs(ms.mean - kernel_mean(p, 0.5, 1.0)) < 4.0 * ms.std_error);
}

TEST_CASE("trivial and structural properties of the statistics") {
  auto s = exact_spec({0.5}, {0.5}, 1e-3, 50.0, 300, 31);
  SUBCASE("an interval covering the range gives the exit time") {
    const std::vector<double> etas{0.2, 0.4, 3.0};
    const auto r = occupation_time(s, etas, 2.0);
    CHECK(r.reports[0][2].estimate == doctest::Approx(r.exit_time.estimate).epsilon(1e-12));
    const std::vector<double> inner{0.2}, outer{0.4};
    const auto a = occupation_time(s, inner, 2.0), b = occupation_time(s, outer, 2.0);
    CHECK(a.reports[0][0].estimate == r.reports[0][0].estimate);
    CHECK(b.reports[0][0].estimate == r.reports[0][1].estimate);
  }
  SUBCASE("no upcrossing can complete when gamma is at least K") {
    const std::vector<double> gs{2.5};
    const auto c = upcrossings(s, gs, 2.0);
    CHECK(c[0].exceed.size() == 1);
    CHECK(c[0].survival[0] == 0.0);
  }
  SUBCASE("discounted functionals are linear on common paths") {
    s.horizon = 14.0;
    const std::vector<TestFunctionSpec> fs{TestFunctionSpec::indicator({0.0}, {0.7}),
                                           TestFunctionSpec::indicator({0.7}, {1.0}),
                                           TestFunctionSpec::indicator({0.0}, {1.0}),
                                           TestFunctionSpec::bump({0.2}, {1.2}, 0.0)};
    const auto m = discounted_functionals(s, 1.0, fs);
    CHECK((m.col(0) + m.col(1) - m.col(2)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(m.col(3).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(krylov_functional(s, 1.0, TestFunctionSpec::coordinate_monotone(1, 0, 1.0)),
                    std::invalid_argument);
  }
  SUBCASE("submartingale gaps add over adjacent intervals") {
    s.horizon = 1.0;
    const auto f = TestFunctionSpec::coordinate_monotone(1, 0, 1.0);
    const double ab = submartingale_check(s, f, 0.2, 0.5).estimate;
    const double bc = submartingale_check(s, f, 0.5, 0.9).estimate;
    const double ac = submartingale_check(s, f, 0.2, 0.9).estimate;
    CHECK(ab + bc == doctest::Approx(ac).epsilon(1e-12));
  }
  SUBCASE("deep interior start spends no time near the boundary") {
    auto deep = exact_spec({0.5}, {5.0}, 1e-3, 0.05, 200, 32);
    const std::vector<double> tols{0.1};
    CHECK(boundary_time(deep, tols)[0].estimate == 0.0);
  }
}
