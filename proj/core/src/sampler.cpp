#include "degdiff/sampler.hpp"

#include <numbers>
#include <stdexcept>
#include <string>

namespace degdiff {

double sample_besq(double delta, double t, double z0, Rng& rng) {
  if (!(delta > 0.0 && delta < 2.0)) throw std::domain_error("sample_besq: dimension must lie in (0, 2)");
  if (!(t > 0.0)) throw std::domain_error("sample_besq: time must be positive");
  if (!(z0 >= 0.0)) throw std::domain_error("sample_besq: start must be nonnegative");
  const double n = static_cast<double>(rng.poisson(z0 / (2.0 * t)));
  return 2.0 * t * rng.gamma(n + 0.5 * delta);
}

double sample_z(const KernelParams& p, double t, double x0, Rng& rng) {
  if (!(x0 >= 0.0)) throw std::domain_error("sample_z: start must be nonnegative");
  const double y0 = phi(p, x0);
  const double x = sample_besq(p.delta, t, y0 * y0, rng);
  return phi_inverse(p, std::sqrt(x));
}

PathSample sample_path_exact(const KernelParams& p, std::span<const double> times, double x0,
                             const RandomStream& stream) {
  if (times.empty() || times.front() != 0.0) throw std::invalid_argument("sample_path_exact: grid must start at 0");
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (!(times[k] > times[k - 1])) {
      throw std::invalid_argument("sample_path_exact: grid not strictly increasing at index " + std::to_string(k));
    }
  }
  PathSample path;
  path.times.assign(times.begin(), times.end());
  path.dim = 1;
  path.states.resize(times.size());
  path.provenance = {"exact", std::hash<double>{}(p.alpha), stream};
  Rng rng(stream);
  path.states[0] = x0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    path.states[k] = sample_z(p, times[k] - times[k - 1], path.states[k - 1], rng);
  }
  return path;
}

ExactStepper::ExactStepper(const KernelParams& p, double x0)
    : p_(p), scale_(std::pow(p.b * std::numbers::sqrt2, 1.0 / p.b)), x_(phi(p, x0) * phi(p, x0)) {
  if (!(x0 >= 0.0)) throw std::domain_error("ExactStepper: start must be nonnegative");
}

}  // namespace degdiff
