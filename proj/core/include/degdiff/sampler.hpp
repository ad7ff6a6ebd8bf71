#pragma once

// Exact simulation of Z through the squared Bessel process X = phi(Z)^2.

#include <cmath>
#include <span>

#include "degdiff/kernel.hpp"
#include "degdiff/path.hpp"
#include "degdiff/random.hpp"

namespace degdiff {

/// One draw of a squared Bessel process of dimension delta in (0, 2) at time
/// t from z0: N ~ Poisson(z0 / 2t), then 2t Gamma(N + delta/2).
double sample_besq(double delta, double t, double z0, Rng& rng);

/// One exact draw from density_z(p, t, x0, .).
double sample_z(const KernelParams& p, double t, double x0, Rng& rng);

/// Exact Markov chain on the grid `times` (strictly increasing, starting at 0)
/// started at x0. The path has no local-time record.
PathSample sample_path_exact(const KernelParams& p, std::span<const double> times, double x0,
                             const RandomStream& stream);

/// Streaming exact stepper holding the squared Bessel state. Stepping costs
/// one Poisson and one gamma draw; z() converts back on demand.
class ExactStepper {
 public:
  ExactStepper(const KernelParams& p, double x0);
  void step(double dt, Rng& rng) { x_ = sample_besq(p_.delta, dt, x_, rng); }
  double z() const { return z_of(x_); }
  /// Z corresponding to a squared Bessel value.
  double z_of(double besq) const { return scale_ * std::pow(besq, 0.5 / p_.b); }
  double squared_bessel() const { return x_; }
  /// Squared Bessel value corresponding to Z = level, for threshold tests
  /// without converting the state.
  double level(double z) const { return phi(p_, z) * phi(p_, z); }

 private:
  KernelParams p_;
  double scale_;
  double x_;
};

}  // namespace degdiff
