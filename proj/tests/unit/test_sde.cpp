#include <doctest.h>

#include <cmath>
#include <vector>

#include "degdiff/kernel.hpp"
#include "degdiff/parallel.hpp"
#include "degdiff/sampler.hpp"
#include "degdiff/sde.hpp"
#include "degdiff/stats.hpp"

using namespace degdiff;

TEST_CASE("model validation and contract enforcement") {
  auto m = ModelSpec::constant_coefficients({0.5}, 1.0, 0.0);
  CHECK_NOTHROW(m.validate());
  m.diffusion[0] = CoefficientField::constant(5.0);
  CHECK_THROWS_AS(m.validate(), std::invalid_argument);

  auto lying = ModelSpec::constant_coefficients({0.5}, 1.0, 0.0);
  lying.diffusion[0] = CoefficientField::custom("lies", [](std::span<const double> x) { return 1.0 + x[0]; }, 1.0, 1.5);
  const std::vector<double> x0{0.8};
  EulerStepper st(lying, x0, Projection::reflect);
  Rng rng({1, 0});
  try {
    st.step(1e-3, rng);
    FAIL("expected a contract violation");
  } catch (const model_contract_violation& e) {
    CHECK(e.coordinate() == 0);
    CHECK(e.state()[0] == doctest::Approx(0.8));
  }
  CHECK(m.digest() != lying.digest());
  CHECK(ModelSpec::constant_coefficients({0.5}).digest() == ModelSpec::constant_coefficients({0.5}).digest());
}

TEST_CASE("coefficient presets") {
  const auto aff = CoefficientField::affine_clamped(1.0, {0.5, -1.0}, 0.5, 2.0);
  const std::vector<double> x{1.0, 0.2}, far{10.0, 0.0};
  CHECK(aff.eval(x) == doctest::Approx(1.3));
  CHECK(aff.eval(far) == 2.0);
  const auto tab = CoefficientField::tabulated(1, {0.0, 1.0, 2.0}, {1.0, 2.0, 0.5});
  CHECK(tab.eval(x) == doctest::Approx(1.2));
  CHECK(tab.lower == 0.5);
  CHECK(tab.upper == 2.0);
}

TEST_CASE("projection keeps states nonnegative and books the deficit as local time") {
  for (auto proj : {Projection::reflect, Projection::truncate}) {
    const auto m = ModelSpec::constant_coefficients({0.5, 0.3}, 1.0, -0.5, 0.0);
    const std::vector<double> x0{0.05, 0.02};
    EulerStepper st(m, x0, proj);
    Rng rng({2, 0});
    std::vector<double> prev_l(2, 0.0);
    int projected_steps = 0;
    for (int k = 0; k < 20000; ++k) {
      st.step(1e-3, rng);
      for (std::size_t i = 0; i < 2; ++i) {
        const double dl = st.local_time()[i] - prev_l[i];
        CHECK(st.state()[i] >= 0.0);
        CHECK(dl >= 0.0);
        if (st.projected()[i]) {
          ++projected_steps;
          const double deficit = -st.proposal()[i];
          CHECK(dl == doctest::Approx(proj == Projection::reflect ? 2.0 * deficit : deficit));
          CHECK(st.state()[i] - st.proposal()[i] == doctest::Approx(dl));
        } else {
          CHECK(dl == 0.0);
        }
        prev_l[i] = st.local_time()[i];
      }
    }
    CHECK(projected_steps > 0);
  }
}

TEST_CASE("truncation without regularization traps the path at the origin") {
  // The diffusion coefficient vanishes at 0, so a truncated step to 0 is
  // absorbing when there is no drift; reflection never lands exactly on 0.
  const auto m = ModelSpec::constant_coefficients({0.5}, 1.0, 0.0, 0.0);
  const std::vector<double> x0{0.05};
  EulerStepper trunc(m, x0, Projection::truncate), refl(m, x0, Projection::reflect);
  Rng r1({3, 0}), r2({3, 0});
  for (int k = 0; k < 5000; ++k) {
    trunc.step(1e-3, r1);
    refl.step(1e-3, r2);
  }
  CHECK(trunc.state()[0] == 0.0);
  CHECK(refl.state()[0] > 0.0);
}

TEST_CASE("far from the boundary the scheme is plain Euler") {
  const auto m = ModelSpec::constant_coefficients({0.5}, 1.0, 0.0);
  const std::vector<double> x0{2.0};
  SchemeConfig cfg{1e-4, 1e-2, 1, Projection::reflect, true};
  const RandomStream stream{4, 1};
  const auto path = simulate_reflected_path(m, x0, cfg, stream);
  Rng rng(stream);
  double x = 2.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    x += std::sqrt(2.0) * std::pow(x, 0.25) * std::sqrt(1e-4) * rng.normal();
    CHECK(path.state(k, 0) == doctest::Approx(x).epsilon(1e-14));
    CHECK(path.local(k, 0) == 0.0);
  }
}

TEST_CASE("batch simulation is reproducible across thread counts") {
  const auto m = ModelSpec::constant_coefficients({0.5}, 1.0, 0.2, 0.01);
  const std::vector<double> x0{0.3};
  SchemeConfig cfg{1e-3, 0.2, 16, Projection::reflect, true};
  set_thread_count(1);
  const auto a = simulate_reflected(m, x0, cfg, 77, 5);
  set_thread_count(3);
  const auto b = simulate_reflected(m, x0, cfg, 77, 5);
  set_thread_count(0);
  for (std::size_t n = 0; n < a.size(); ++n) {
    CHECK(a[n].states == b[n].states);
    CHECK(*a[n].local_time == *b[n].local_time);
  }
  CHECK(a[0].states != a[1].states);
}

TEST_CASE("coordinate transform") {
  const std::vector<double> alpha{0.5}, one{1.0};
  CHECK(transform_gamma(alpha, one)[0] == doctest::Approx(4.0 / 3.0));
  Rng rng({5, 0});
  const std::vector<double> alphas{0.3, 0.5, 0.7};
  for (int k = 0; k < 200; ++k) {
    std::vector<double> x{std::exp(4 * rng.uniform() - 2), std::exp(4 * rng.uniform() - 2), rng.uniform()};
    const auto back = inverse_transform_gamma(alphas, transform_gamma(alphas, x));
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(back[i] / x[i] - 1.0) < 1e-12);
  }
  const std::vector<double> zero{0.0};
  CHECK_THROWS_AS(transform_gamma(alpha, zero), std::domain_error);
}

TEST_CASE("the transform turns exact paths into unit-rate quadratic variation") {
  const auto p = kernel_params(0.5);
  const std::vector<double> alpha{0.5};
  double qv = 0.0, time = 0.0;
  const double dt = 1e-4;
  for (std::size_t n = 0; n < 40; ++n) {
    Rng rng(path_stream(6, 0, n));
    double z = 2.0;
    for (int k = 0; k < 5000; ++k) {
      const double next = sample_z(p, dt, z, rng);
      if (z > 0.5 && next > 0.5) {
        const double y0 = transform_gamma(alpha, std::vector<double>{z})[0];
        const double y1 = transform_gamma(alpha, std::vector<double>{next})[0];
        qv += (y1 - y0) * (y1 - y0);
        time += dt;
      }
      z = next;
    }
  }
  REQUIRE(time > 5.0);
  CHECK(qv / time == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("modulus of continuity") {
  const auto m = ModelSpec::constant_coefficients({0.5}, 1.0, 0.0);
  const std::vector<double> x0{1.0};
  SchemeConfig cfg{1e-3, 1.0, 400, Projection::reflect, false};
  const auto paths = simulate_reflected(m, x0, cfg, 8);
  CHECK(tightness_modulus(paths, 100.0, 1.0, 10.0, 0.1).estimate == 0.0);

  std::vector<double> probs;
  for (double probe : {0.4, 0.2, 0.1, 0.05, 0.025}) probs.push_back(tightness_modulus(paths, 0.4, 1.0, 10.0, probe).estimate);
  for (std::size_t k = 1; k < probs.size(); ++k) CHECK(probs[k] <= probs[k - 1]);
  CHECK(probs.front() > probs.back());
  CHECK_THROWS_AS(tightness_modulus(paths, 0.4, 1.0, 10.0, 1e-3), std::invalid_argument);

  std::vector<MonteCarloReport> by_eps;
  for (double eps : {0.0, 0.01, 0.1}) {
    const auto me = ModelSpec::constant_coefficients({0.5}, 1.0, 0.0, eps);
    by_eps.push_back(tightness_modulus(simulate_reflected(me, x0, cfg, 9), 0.4, 1.0, 10.0, 0.1));
  }
  for (const auto& r : by_eps) {
    CHECK(std::abs(r.estimate - by_eps[0].estimate) <= 3.0 * combined_se(r.std_error, by_eps[0].std_error) + 1e-12);
  }
}

TEST_CASE("drift-free exchangeable coordinates have exchangeable terminal laws") {
  const auto m = ModelSpec::constant_coefficients({0.5, 0.5}, 1.0, 0.0);
  const std::vector<double> x0{0.7, 0.7};
  SchemeConfig cfg{1e-3, 0.5, 4000, Projection::reflect, false};
  const auto paths = simulate_reflected(m, x0, cfg, 10);
  std::vector<double> first, second;
  for (const auto& p : paths) {
    first.push_back(p.state(p.size() - 1, 0));
    second.push_back(p.state(p.size() - 1, 1));
  }
  CHECK(ks_pvalue(ks_two_sample(first, second), 2000.0) > 0.01);
}

TEST_CASE("terminal-law error shrinks with the step") {
  const auto p = kernel_params(0.5);
  const auto m = ModelSpec::constant_coefficients({0.5}, 1.0, 0.0);
  const std::vector<double> x0{1.0};
  constexpr std::size_t n = 20000;
  std::vector<double> exact(n);
  for (std::size_t k = 0; k < n; ++k) {
    Rng rng(path_stream(11, 0, k));
    exact[k] = sample_z(p, 1.0, 1.0, rng);
  }
  std::vector<double> w;
  for (double dt : {0.25, 0.05, 0.01}) {
    SchemeConfig cfg{dt, 1.0, n, Projection::reflect, false};
    const auto paths = simulate_reflected(m, x0, cfg, 12);
    std::vector<double> term;
    for (const auto& q : paths) term.push_back(q.states.back());
    w.push_back(wasserstein1(term, exact));
  }
  CHECK(w[0] > w[1]);
  CHECK(w[1] > w[2]);
}
