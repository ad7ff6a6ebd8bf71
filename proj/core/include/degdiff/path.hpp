#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "degdiff/random.hpp"

namespace degdiff {

struct Provenance {
  std::string scheme;               // "exact" or "euler"
  std::uint64_t model_digest = 0;   // ModelSpec::digest() or a hash of the kernel parameters
  RandomStream stream;
};

/// One trajectory on a time grid. States and local times are stored row-major
/// (time index major, coordinate minor). Exact paths carry no local time.
struct PathSample {
  std::vector<double> times;
  std::size_t dim = 1;
  std::vector<double> states;
  std::optional<std::vector<double>> local_time;
  Provenance provenance;

  std::size_t size() const { return times.size(); }
  double state(std::size_t k, std::size_t i) const { return states[k * dim + i]; }
  std::span<const double> state(std::size_t k) const { return {states.data() + k * dim, dim}; }
  double local(std::size_t k, std::size_t i) const { return (*local_time)[k * dim + i]; }
};

/// Metadata written in front of a serialized batch.
struct BatchHeader {
  std::vector<double> alphas;
  std::uint64_t seed = 0;
  std::string scheme;
};

/// Columnar binary file: the 8-byte magic "DDPATHS1", a little-endian uint64
/// byte count, a JSON header (alphas, seed, scheme, n_paths, n_times, dim,
/// has_local_time, grid), then float64 columns: for each coordinate the states
/// of every path in path order, followed by the local-time columns if present.
/// All paths must share one grid.
void write_paths_binary(const std::filesystem::path& file, std::span<const PathSample> paths,
                        const BatchHeader& header);
std::vector<PathSample> read_paths_binary(const std::filesystem::path& file, BatchHeader* header = nullptr);

/// CSV with a commented header (alpha, seed, n_paths, grid) and one row per
/// (path, time): path,time,x0..x{d-1}[,L0..L{d-1}].
void write_paths_csv(const std::filesystem::path& file, std::span<const PathSample> paths,
                     const BatchHeader& header);

}  // namespace degdiff
