#pragma once

// Projected Euler-Maruyama for reflected degenerate diffusions on the orthant:
//   dX^i = sqrt(2 a_i(X)) ((X^i)+ + eps)^{alpha_i/2} dW^i + b_i(X) dt + dL^i.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "degdiff/path.hpp"
#include "degdiff/random.hpp"
#include "degdiff/stats.hpp"

namespace degdiff {

/// A coefficient field evaluated at the full state, with declared bounds that
/// every evaluation must respect.
struct CoefficientField {
  std::string description;
  std::function<double(std::span<const double>)> eval;
  double lower = 0.0;
  double upper = 0.0;

  static CoefficientField constant(double value);
  /// clamp(c0 + sum_j slope_j x_j, lo, hi).
  static CoefficientField affine_clamped(double c0, std::vector<double> slope, double lo, double hi);
  /// Piecewise-linear interpolation in one coordinate, constant beyond the
  /// table ends. Bounds are the table's extreme values.
  static CoefficientField tabulated(std::size_t coordinate, std::vector<double> nodes, std::vector<double> values);
  static CoefficientField custom(std::string description, std::function<double(std::span<const double>)> f,
                                 double lower, double upper);
};

class model_contract_violation : public std::runtime_error {
 public:
  model_contract_violation(const std::string& what, std::size_t coordinate, std::vector<double> state)
      : std::runtime_error(what), coordinate_(coordinate), state_(std::move(state)) {}
  std::size_t coordinate() const { return coordinate_; }
  const std::vector<double>& state() const { return state_; }

 private:
  std::size_t coordinate_;
  std::vector<double> state_;
};

struct ModelSpec {
  std::vector<double> alphas;
  std::vector<CoefficientField> diffusion;  // a_i, declared within [1/c1, c1]
  std::vector<CoefficientField> drift;      // b_i, declared within [-c1, c1]
  double epsilon = 0.0;
  double c1 = 1.0;

  std::size_t dim() const { return alphas.size(); }
  /// Throws std::invalid_argument when sizes, exponents or declared bounds
  /// are inconsistent.
  void validate() const;
  /// Stable hash of the model description.
  std::uint64_t digest() const;

  static ModelSpec constant_coefficients(std::vector<double> alphas, double a = 1.0, double b = 0.0,
                                         double epsilon = 0.0);
};

enum class Projection {
  reflect,   // new state |proposal|, local time increment 2 (-proposal)+
  truncate,  // new state max(proposal, 0), local time increment (-proposal)+
};

struct SchemeConfig {
  double dt = 1e-3;
  double horizon = 1.0;
  std::size_t n_paths = 1;
  Projection projection = Projection::reflect;
  bool record_local_time = true;

  void validate() const;
};

/// One projected Euler step at a time; the building block of every
/// Euler-based estimator.
class EulerStepper {
 public:
  EulerStepper(const ModelSpec& model, std::span<const double> x0, Projection projection);

  void step(double dt, Rng& rng);
  /// Same step driven by given Brownian increments (one per coordinate), so
  /// schemes with different dt can share one Brownian path.
  void step_increments(double dt, std::span<const double> dw);
  std::span<const double> state() const { return x_; }
  std::span<const double> local_time() const { return local_; }
  /// Per coordinate: whether the last proposal was negative.
  const std::vector<char>& projected() const { return projected_; }
  /// Per coordinate: the last proposal before projection.
  std::span<const double> proposal() const { return proposal_; }

 private:
  const ModelSpec* model_;
  Projection projection_;
  std::vector<double> x_, local_, proposal_;
  std::vector<char> projected_;
  std::vector<double> diff_, drift_, half_alpha_, noise_;
};

/// Simulates one path on the uniform grid k dt, k = 0..floor(horizon/dt).
PathSample simulate_reflected_path(const ModelSpec& model, std::span<const double> x0, const SchemeConfig& cfg,
                                   const RandomStream& stream);

/// cfg.n_paths paths; path n uses path_stream(seed, salt, n).
std::vector<PathSample> simulate_reflected(const ModelSpec& model, std::span<const double> x0,
                                           const SchemeConfig& cfg, std::uint64_t seed, std::uint64_t salt = 0);

/// Coordinatewise y_i = x_i^{b_i} / b_i with b_i = 1 - alpha_i / 2, for
/// strictly positive x.
std::vector<double> transform_gamma(std::span<const double> alphas, std::span<const double> x);
std::vector<double> inverse_transform_gamma(std::span<const double> alphas, std::span<const double> y);

/// Fraction of paths whose modulus of continuity over windows shorter than
/// `probe`, up to the exit time from [0, M]^d capped at t0, exceeds delta
/// (sup norm over coordinates). Binomial standard error.
MonteCarloReport tightness_modulus(std::span<const PathSample> paths, double delta, double t0, double M,
                                   double probe);

}  // namespace degdiff
