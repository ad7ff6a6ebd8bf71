#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <nlohmann/json.hpp>
#include <span>
#include <string>
#include <vector>

namespace degdiff {

/// Result of every Monte Carlo statistic.
struct MonteCarloReport {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t n_paths = 0;
  std::string scheme;
  nlohmann::json parameters = nlohmann::json::object();
};

void to_json(nlohmann::json& j, const MonteCarloReport& r);

/// Mean with standard error sd / sqrt(n).
struct MeanSe {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};
MeanSe mean_se(std::span<const double> xs);

/// Standard error of the difference of two independent means.
double combined_se(double se_a, double se_b);

/// Welford accumulator, mergeable in a fixed order.
class RunningStats {
 public:
  void add(double x);
  void merge(const RunningStats& o);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double std_error() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Sup distance between the empirical CDF of `sample` and `cdf`.
double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf);
/// Two-sample Kolmogorov-Smirnov distance.
double ks_two_sample(std::vector<double> a, std::vector<double> b);
/// Asymptotic Kolmogorov tail probability P(sqrt(n_eff) D > x) with the
/// Stephens small-sample correction; n_eff = n for one sample and
/// n m / (n + m) for two.
double ks_pvalue(double d, double n_eff);
/// Critical distance at the given level.
double ks_critical(double level, double n_eff);

/// Wasserstein-1 distance between two empirical laws on the line.
double wasserstein1(std::vector<double> a, std::vector<double> b);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double slope_se = 0.0;
};
/// Ordinary least squares y = intercept + slope x (optionally weighted).
LinearFit linear_fit(std::span<const double> x, std::span<const double> y, std::span<const double> w = {});
/// Least-squares slope of log y against log x.
LinearFit loglog_fit(std::span<const double> x, std::span<const double> y);

/// Deterministic bootstrap: draws `replicates` resamples of indices
/// [0, n) from a stream seeded by `seed` and returns the index lists' images
/// under `statistic`.
std::vector<double> bootstrap(std::size_t n, std::size_t replicates, std::uint64_t seed,
                              const std::function<double(std::span<const std::size_t>)>& statistic);

double sample_sd(std::span<const double> xs);

}  // namespace degdiff
