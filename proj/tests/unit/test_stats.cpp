#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "degdiff/parallel.hpp"
#include "degdiff/stats.hpp"

using namespace degdiff;

TEST_CASE("mean and standard error") {
  const std::vector<double> xs{1, 2, 3, 4};
  const auto m = mean_se(xs);
  CHECK(m.mean == doctest::Approx(2.5));
  CHECK(m.std_error == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(combined_se(3.0, 4.0) == doctest::Approx(5.0));
}

TEST_CASE("running statistics merge like a single pass") {
  RunningStats a, b, all;
  for (int i = 0; i < 100; ++i) {
    const double v = std::sin(i * 0.37) * i;
    (i < 37 ? a : b).add(v);
    all.add(v);
  }
  a.merge(b);
  CHECK(a.count() == all.count());
  CHECK(a.mean() == doctest::Approx(all.mean()).epsilon(1e-12));
  CHECK(a.variance() == doctest::Approx(all.variance()).epsilon(1e-12));
}

TEST_CASE("Kolmogorov tail probabilities") {
  // Classical 5% and 1% points of the limiting distribution.
  CHECK(ks_pvalue(1.3581 / std::sqrt(1e8), 1e8) == doctest::Approx(0.05).epsilon(0.01));
  CHECK(ks_pvalue(1.6276 / std::sqrt(1e8), 1e8) == doctest::Approx(0.01).epsilon(0.01));
  CHECK(ks_critical(0.01, 1e8) * 1e4 == doctest::Approx(1.6276).epsilon(1e-3));
}

TEST_CASE("one- and two-sample KS distances") {
  std::vector<double> u;
  for (int i = 0; i < 1000; ++i) u.push_back((i + 0.5) / 1000.0);
  CHECK(ks_statistic(u, [](double x) { return x; }) == doctest::Approx(0.0005));
  std::vector<double> shifted = u;
  for (auto& v : shifted) v += 0.1;
  CHECK(ks_two_sample(u, shifted) == doctest::Approx(0.1).epsilon(0.02));
  CHECK(ks_two_sample(u, u) == 0.0);
}

TEST_CASE("Wasserstein distance of a shift is the shift") {
  std::vector<double> a{0.3, 1.2, -0.4, 2.2, 0.0}, b = a, c{0.0, 1.0};
  for (auto& v : b) v += 0.25;
  CHECK(wasserstein1(a, b) == doctest::Approx(0.25));
  // Unequal sizes: {0,1} against {0.5}: integral of |F_a - F_b| = 0.5.
  CHECK(wasserstein1(c, {0.5}) == doctest::Approx(0.5));
  CHECK(wasserstein1(std::vector<double>{0.0, 0.0, 1.0}, std::vector<double>{0.0, 1.0}) ==
        doctest::Approx(1.0 / 6.0));
}

TEST_CASE("least squares recovers an exact line and a power law") {
  const std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(3.0 - 0.5 * v);
  const auto f = linear_fit(x, y);
  CHECK(f.slope == doctest::Approx(-0.5));
  CHECK(f.intercept == doctest::Approx(3.0));
  CHECK(f.r2 == doctest::Approx(1.0));
  std::vector<double> py;
  for (double v : x) py.push_back(2.0 * std::pow(v, 0.7));
  CHECK(loglog_fit(x, py).slope == doctest::Approx(0.7));
}

TEST_CASE("bootstrap is deterministic and centred") {
  std::vector<double> xs(500);
  std::iota(xs.begin(), xs.end(), 0.0);
  auto stat = [&](std::span<const std::size_t> idx) {
    double s = 0.0;
    for (auto i : idx) s += xs[i];
    return s / static_cast<double>(idx.size());
  };
  const auto a = bootstrap(xs.size(), 200, 9, stat);
  const auto b = bootstrap(xs.size(), 200, 9, stat);
  CHECK(a == b);
  const auto m = mean_se(a);
  CHECK(std::abs(m.mean - 249.5) < 3.0);
  // Bootstrap spread of the mean is about sd / sqrt(n).
  CHECK(sample_sd(a) == doctest::Approx(sample_sd(xs) / std::sqrt(500.0)).epsilon(0.2));
}

TEST_CASE("parallel_for is scheduling independent and propagates errors") {
  std::vector<double> serial(1000), threaded(1000);
  set_thread_count(1);
  parallel_for(serial.size(), [&](std::size_t i) { serial[i] = std::sqrt(static_cast<double>(i)); });
  set_thread_count(4);
  parallel_for(threaded.size(), [&](std::size_t i) { threaded[i] = std::sqrt(static_cast<double>(i)); }, 7);
  CHECK(serial == threaded);
  CHECK_THROWS_AS(parallel_for(100,
                               [](std::size_t i) {
                                 if (i == 57) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  set_thread_count(0);
  CHECK(thread_count() >= 1);
}
