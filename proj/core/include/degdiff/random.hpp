#pragma once

// Reproducible random streams. A stream is identified by (seed, stream_id);
// the generator state is derived from both through splitmix64, so streams for
// different ids can be created in any order on any thread.

#include <boost/random/normal_distribution.hpp>
#include <cstdint>
#include <limits>

namespace degdiff {

struct RandomStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

std::uint64_t splitmix64(std::uint64_t& state);

/// Order-sensitive 64-bit mix of two words.
std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b);

/// Stream for one path of a batch. The salt separates batches that share a
/// seed (different experiments, schemes or parameter values).
inline RandomStream path_stream(std::uint64_t seed, std::uint64_t salt, std::uint64_t path_index) {
  return {seed, hash_combine(salt, path_index)};
}

/// xoshiro256++; satisfies UniformRandomBitGenerator.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(const RandomStream& stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform on (0, 1); never returns 0 or 1.
  double uniform() { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal (ziggurat).
  double normal() { return boost::random::normal_distribution<double>{}(*this); }

  /// Gamma(shape, 1) by Marsaglia-Tsang. Shapes below one are boosted by one
  /// and corrected with a power of a uniform.
  double gamma(double shape);

  /// Poisson(mean): inversion for small means, transformed rejection (PTRS)
  /// otherwise.
  std::uint64_t poisson(double mean);

  const RandomStream& stream() const { return stream_; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  RandomStream stream_;
  std::uint64_t s_[4];
};

}  // namespace degdiff
