#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "degdiff/kernel.hpp"
#include "degdiff/path.hpp"
#include "degdiff/sampler.hpp"
#include "degdiff/stats.hpp"

using namespace degdiff;

namespace {

std::vector<double> draws(const KernelParams& p, double t, double x0, int n, std::uint64_t seed) {
  Rng rng({seed, 0});
  std::vector<double> out(n);
  for (auto& v : out) v = sample_z(p, t, x0, rng);
  return out;
}

}  // namespace

TEST_CASE("squared Bessel from the origin has mean t delta") {
  const double delta = 2.0 / 3.0, t = 0.7;
  Rng rng({11, 0});
  RunningStats s;
  for (int i = 0; i < 1000000; ++i) s.add(sample_besq(delta, t, 0.0, rng));
  CHECK(std::abs(s.mean() - t * delta) < 3.0 * s.std_error());
}

TEST_CASE("squared Bessel concentrates at the start for small times") {
  Rng rng({12, 0});
  double prev_var = INFINITY;
  for (double t : {1e-1, 1e-3, 1e-5}) {
    RunningStats s;
    for (int i = 0; i < 20000; ++i) s.add(sample_besq(2.0 / 3.0, t, 4.0, rng));
    CHECK(std::abs(s.mean() - 4.0) < 0.5);
    CHECK(s.variance() < prev_var);
    prev_var = s.variance();
  }
  CHECK(prev_var < 1e-3);
}

TEST_CASE("squared Bessel law matches the quadrature distribution function") {
  // delta = 2/3 is the alpha = 1/2 kernel; X = phi(Z)^2 with phi(Z_0) = 1.
  const auto p = kernel_params(0.5);
  const double z0 = phi_inverse(p, 1.0);
  const KernelCdf cdf(p, 1.0, z0);
  Rng rng({13, 0});
  std::vector<double> xs(100000);
  for (auto& x : xs) x = sample_besq(p.delta, 1.0, 1.0, rng);
  const double d = ks_statistic(xs, [&](double x) { return cdf(phi_inverse(p, std::sqrt(x))); });
  CHECK(ks_pvalue(d, static_cast<double>(xs.size())) > 0.01);
}

TEST_CASE("exact draws of Z pass a KS test against the kernel") {
  for (auto [alpha, x0, t] : {std::tuple{0.5, 0.0, 1.0}, {0.3, 1.0, 0.25}, {0.7, 1.0, 1.0}}) {
    const auto p = kernel_params(alpha);
    const KernelCdf cdf(p, t, x0);
    const auto xs = draws(p, t, x0, 100000, 14);
    const double d = ks_statistic(xs, [&](double y) { return cdf(y); });
    CAPTURE(alpha);
    CAPTURE(x0);
    CAPTURE(t);
    CHECK(ks_pvalue(d, 1e5) > 0.01);
  }
}

TEST_CASE("small time returns the start") {
  const auto p = kernel_params(0.5);
  Rng rng({15, 0});
  for (int i = 0; i < 100; ++i) CHECK(std::abs(sample_z(p, 1e-10, 2.0, rng) - 2.0) < 1e-3);
}

TEST_CASE("space-time scaling in law") {
  const auto p = kernel_params(0.5);
  const double t = 3.0, x0 = 1.2;
  const double s = std::pow(t, p.scaling_exponent());
  const auto a = draws(p, t, x0, 50000, 16);
  auto b = draws(p, 1.0, x0 / s, 50000, 17);
  for (auto& v : b) v *= s;
  CHECK(ks_pvalue(ks_two_sample(a, b), 25000.0) > 0.01);
}

TEST_CASE("exact paths: one step reproduces sample_z, two steps match one in law") {
  const auto p = kernel_params(0.5);
  const RandomStream stream{21, 3};
  const std::vector<double> one{0.0, 0.8};
  const auto path = sample_path_exact(p, one, 0.5, stream);
  Rng rng(stream);
  CHECK(path.state(1, 0) == sample_z(p, 0.8, 0.5, rng));
  CHECK_FALSE(path.local_time.has_value());

  const std::vector<double> two{0.0, 0.4, 0.8};
  std::vector<double> a(40000), b(40000);
  for (std::size_t n = 0; n < a.size(); ++n) {
    a[n] = sample_path_exact(p, one, 0.5, path_stream(22, 1, n)).state(1, 0);
    b[n] = sample_path_exact(p, two, 0.5, path_stream(22, 2, n)).state(2, 0);
  }
  CHECK(ks_pvalue(ks_two_sample(a, b), 20000.0) > 0.01);

  const auto again = sample_path_exact(p, two, 0.5, stream);
  CHECK(again.states == sample_path_exact(p, two, 0.5, stream).states);
  for (double v : again.states) CHECK(v >= 0.0);

  const std::vector<double> bad{0.0, 0.5, 0.5};
  CHECK_THROWS_AS(sample_path_exact(p, bad, 0.5, stream), std::invalid_argument);
  CHECK_THROWS_AS(sample_besq(2.5, 1.0, 1.0, rng), std::domain_error);
  CHECK_THROWS_AS(sample_besq(0.0, 1.0, 1.0, rng), std::domain_error);
}

TEST_CASE("conditional means factor through the kernel") {
  const auto p = kernel_params(0.5);
  const double t1 = 0.5, t2 = 1.0;
  const std::vector<double> grid{0.0, t1, t2};
  const std::vector<std::pair<double, double>> bins{{0.2, 0.4}, {0.7, 0.8}, {1.2, 1.3}};
  std::vector<RunningStats> cond(bins.size());
  std::vector<RunningStats> expect(bins.size());
  for (std::size_t n = 0; n < 60000; ++n) {
    const auto path = sample_path_exact(p, grid, 0.8, path_stream(23, 0, n));
    for (std::size_t k = 0; k < bins.size(); ++k) {
      const double z = path.state(1, 0);
      if (z >= bins[k].first && z < bins[k].second) {
        cond[k].add(path.state(2, 0));
        expect[k].add(kernel_mean(p, t2 - t1, z));
      }
    }
  }
  for (std::size_t k = 0; k < bins.size(); ++k) {
    CAPTURE(k);
    REQUIRE(cond[k].count() > 500);
    CHECK(std::abs(cond[k].mean() - expect[k].mean()) < 3.0 * combined_se(cond[k].std_error(), expect[k].std_error()));
  }
}

TEST_CASE("exact stepper thresholds in squared-Bessel units") {
  const auto p = kernel_params(0.5);
  ExactStepper st(p, 1.5);
  CHECK(std::abs(st.z() - 1.5) < 1e-12);
  CHECK(std::abs(st.level(1.5) - st.squared_bessel()) < 1e-15);
  Rng rng({24, 0});
  st.step(0.1, rng);
  CHECK(st.z() >= 0.0);
}

TEST_CASE("path batches round-trip through binary and CSV files") {
  const auto p = kernel_params(0.5);
  const std::vector<double> grid{0.0, 0.1, 0.2, 0.3};
  std::vector<PathSample> batch;
  for (std::size_t n = 0; n < 3; ++n) batch.push_back(sample_path_exact(p, grid, 0.5, path_stream(25, 0, n)));
  batch[1].local_time.emplace(batch[1].states.size(), 0.0);
  const auto dir = std::filesystem::temp_directory_path();
  const auto bin = dir / "degdiff_paths_test.bin";
  CHECK_THROWS_AS(write_paths_binary(bin, batch, {{0.5}, 25, "exact"}), std::invalid_argument);

  for (auto& path : batch) path.local_time.emplace(path.states.size(), 0.25);
  write_paths_binary(bin, batch, {{0.5}, 25, "exact"});
  BatchHeader h;
  const auto back = read_paths_binary(bin, &h);
  REQUIRE(back.size() == 3);
  CHECK(h.seed == 25);
  CHECK(h.alphas == std::vector<double>{0.5});
  for (std::size_t n = 0; n < 3; ++n) {
    CHECK(back[n].states == batch[n].states);
    CHECK(back[n].times == grid);
    CHECK(*back[n].local_time == *batch[n].local_time);
  }
  const auto csv = dir / "degdiff_paths_test.csv";
  write_paths_csv(csv, batch, {{0.5}, 25, "exact"});
  CHECK(std::filesystem::file_size(csv) > 100);
  std::filesystem::remove(bin);
  std::filesystem::remove(csv);
}
