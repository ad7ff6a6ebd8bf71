#pragma once

// Monte Carlo statistics over streamed path batches. Paths are generated on
// the fly, one per stream path_stream(seed, salt, n), and folded into per-path
// slots so results do not depend on the thread count.

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "degdiff/sampler.hpp"
#include "degdiff/sde.hpp"
#include "degdiff/stats.hpp"

namespace degdiff {

enum class Scheme { exact, euler };

std::string to_string(Scheme s);

/// Everything needed to regenerate a batch of paths.
struct PathSpec {
  ModelSpec model;
  std::vector<double> x0;
  Scheme scheme = Scheme::exact;
  double dt = 1e-3;         // scheme step
  std::size_t stride = 1;   // observations every `stride` steps
  double horizon = 10.0;
  Projection projection = Projection::reflect;
  std::size_t n_paths = 1000;
  std::uint64_t seed = 0;
  std::uint64_t salt = 0;

  double observation_step() const { return dt * static_cast<double>(stride); }
  std::size_t observations() const;
  /// Throws std::invalid_argument on inconsistent settings. The exact scheme
  /// needs constant diffusion, zero drift and epsilon = 0; coordinates are
  /// then independent time changes Z_{a_i t}.
  void validate() const;
  nlohmann::json to_json() const;
};

/// Walks one path observation by observation.
class PathCursor {
 public:
  PathCursor(const PathSpec& spec, std::size_t path_index);

  /// Advances to the next observation time; false once the horizon is reached.
  bool advance();
  double time() const { return static_cast<double>(k_) * h_; }
  std::size_t index() const { return k_; }
  std::size_t dim() const { return d_; }

  /// Coordinate i in scheme-native units: squared Bessel value for the exact
  /// scheme, x itself for Euler. Monotone in x.
  double raw(std::size_t i) const { return exact_.empty() ? euler_->state()[i] : exact_[i].squared_bessel(); }
  /// Threshold x on coordinate i in the units of raw().
  double to_raw(std::size_t i, double x) const { return exact_.empty() ? x : exact_[i].level(x); }
  /// Inverse of to_raw.
  double from_raw(std::size_t i, double r) const { return exact_.empty() ? r : exact_[i].z_of(r); }
  std::span<const double> state();
  /// Accumulated local time (Euler); zeros for the exact scheme.
  std::span<const double> local_time() const;

 private:
  const PathSpec* spec_;
  std::size_t d_, k_ = 0, n_obs_;
  double h_;
  Rng rng_;
  std::vector<ExactStepper> exact_;
  std::vector<double> clock_;  // a_i * dt for the exact scheme
  std::optional<EulerStepper> euler_;
  std::vector<double> x_, zeros_;
  bool fresh_ = true;
};

/// Calls body(n, cursor) for every path n in parallel.
void for_each_path(const PathSpec& spec, const std::function<void(std::size_t, PathCursor&)>& body);

/// The first observation interval crossed by a level, resolved by linear
/// interpolation between the straddling nodes. Returns the fraction in (0, 1].
double crossing_fraction(double before, double after, double level);

// ------------------------------------------------------------ test functions

enum class FaceSign { zero, nonnegative, negative, unknown };

struct TestFunctionSpec {
  enum class Kind { bump, coordinate_monotone, indicator };
  Kind kind = Kind::bump;
  std::vector<double> lo, hi;  // support box (bump, indicator)
  std::size_t coordinate = 0;  // coordinate_monotone
  double scale = 1.0;          // coordinate_monotone: f = scale (1 - exp(-x_i / scale))
  double amplitude = 1.0;
  std::string smoothness;
  std::vector<FaceSign> faces;  // sign of df/dx_i on {x_i = 0}

  std::size_t dim() const { return kind == Kind::coordinate_monotone ? faces.size() : lo.size(); }
  double value(std::span<const double> x) const;
  double d1(std::size_t i, std::span<const double> x) const;
  double d2(std::size_t i, std::span<const double> x) const;
  /// L f(x) = sum_i a_i(x) (x_i+ + eps)^{alpha_i} f_ii + b_i(x) f_i.
  double generator(const ModelSpec& model, std::span<const double> x) const;
  /// True when every face carries a nonnegative normal derivative and f is C^2.
  bool certified() const;
  /// L^p(Lebesgue) norm over the orthant; infinite for coordinate_monotone.
  double lp_norm(double p) const;
  double sup_norm() const { return std::abs(amplitude) * (kind == Kind::coordinate_monotone ? scale : 1.0); }
  nlohmann::json to_json() const;

  static TestFunctionSpec bump(std::vector<double> lo, std::vector<double> hi, double amplitude = 1.0);
  static TestFunctionSpec indicator(std::vector<double> lo, std::vector<double> hi, double amplitude = 1.0);
  static TestFunctionSpec coordinate_monotone(std::size_t dim, std::size_t coordinate, double scale);
  /// Copy scaled to unit L^p norm.
  TestFunctionSpec normalized(double p) const;
};

/// 16 bumps on a lattice of centers and widths inside [0, M]^d plus 4
/// coordinate indicators, each normalized to unit L^{p0} norm.
std::vector<TestFunctionSpec> theta_family(std::size_t dim, double M, double p0 = 2.0);

// ---------------------------------------------------------------- statistics

struct OccupationResult {
  std::vector<double> etas;
  double K = 0.0;
  /// reports[i][j]: coordinate i, eta j.
  std::vector<std::vector<MonteCarloReport>> reports;
  MonteCarloReport exit_time;  // E[T_K ^ horizon]
  double censored_fraction = 0.0;  // paths that did not exit before the horizon
};

/// E int_0^{T_K} 1[0, eta](X^i_s) ds for every eta and coordinate, where
/// T_K is the first time max_i X^i reaches K. Refuses grids whose observation
/// step exceeds eta^{2b}/10 for some coordinate.
OccupationResult occupation_time(const PathSpec& spec, std::span<const double> etas, double K);

struct UpcrossingCurve {
  double gamma = 0.0;
  double floor = 0.0;
  std::size_t n_paths = 0;
  std::vector<std::size_t> exceed;  // exceed[m] = #paths with more than m upcrossings
  std::vector<double> survival;     // exceed[m] / n_paths, nonincreasing
  double mean_count = 0.0;
  nlohmann::json to_json() const;
};

/// Completed upcrossings of coordinate `coordinate` from below floor_fraction
/// * gamma to gamma, counted before T_K; one curve per gamma, same paths.
std::vector<UpcrossingCurve> upcrossings(const PathSpec& spec, std::span<const double> gammas, double K,
                                         std::size_t coordinate = 0, double floor_fraction = 0.1);

/// Least-squares fit of log survival against m over the m range where at
/// least min_count paths exceed m.
LinearFit fit_log_survival(const UpcrossingCurve& c, std::size_t min_count = 100);

/// Per-path discounted functionals int_0^T e^{-lambda s} h(X_s) ds by the
/// trapezoid rule on the observation grid, one column per function.
Eigen::MatrixXd discounted_functionals(const PathSpec& spec, double lambda, std::span<const TestFunctionSpec> fs);

/// Mean of the discounted functional with its standard error; parameters echo
/// the L^{p0} norm of f and the horizon truncation bias bound.
MonteCarloReport krylov_functional(const PathSpec& spec, double lambda, const TestFunctionSpec& f,
                                   double p0 = 2.0);

/// Expected fraction of observation times in (0, horizon] with min_i X^i <= tol.
std::vector<MonteCarloReport> boundary_time(const PathSpec& spec, std::span<const double> tols);

struct WeightFactor {
  TestFunctionSpec g;  // bounded, evaluated at time r
  double r = 0.0;
};

/// Per-path values of M^f at the requested times (snapped to the observation
/// grid), M^f_t = f(X_t) - f(X_0) - int_0^t L f(X_u) du by the trapezoid rule.
Eigen::MatrixXd martingale_values(const PathSpec& spec, const TestFunctionSpec& f, std::span<const double> times);

/// E[(M^f_t - M^f_s) Y] with Y = prod_k g_k(X_{r_k}); parameters carry
/// "pass" = (gap >= -3 std_error). Throws std::invalid_argument for
/// uncertified f or r_k > s.
MonteCarloReport submartingale_check(const PathSpec& spec, const TestFunctionSpec& f, double s, double t,
                                     std::span<const WeightFactor> weights = {});

struct ThetaReport {
  double theta = 0.0;         // max_h |S^A h - S^B h|
  double bootstrap_se = 0.0;  // standard deviation of the bootstrap maxima
  std::size_t argmax = 0;
  std::vector<double> delta;  // S^A h - S^B h per function
  std::vector<double> delta_se;
  double max_abs_z = 0.0;     // max_h |delta_h| / delta_se_h
  bool zero_consistent = false;  // max_abs_z <= 3
  nlohmann::json to_json() const;
};

/// Theta over a finite family. Batches must share x0, horizon and exponents.
/// With paired = true the two batches are driven by identical streams and
/// path-wise differences are used for the errors.
ThetaReport uniqueness_theta(const PathSpec& a, const PathSpec& b, double lambda,
                             std::span<const TestFunctionSpec> family, bool paired = false,
                             std::size_t replicates = 200, std::uint64_t bootstrap_seed = 17);

/// Terminal values X^0_T of Euler paths for several step sizes driven by the
/// same Brownian paths: every dt must be an integer multiple of the smallest.
std::vector<std::vector<double>> coupled_euler_terminal(const ModelSpec& model, std::span<const double> x0,
                                                        double horizon, std::span<const double> dts,
                                                        std::size_t n_paths, std::uint64_t seed,
                                                        std::uint64_t salt = 0,
                                                        Projection projection = Projection::reflect);

/// Exact draws of Z_T from x0 (constant coefficients, d = 1).
std::vector<double> exact_terminal(double alpha, double x0, double horizon, std::size_t n, std::uint64_t seed,
                                   std::uint64_t salt = 0);

}  // namespace degdiff
