#include "degdiff/path.hpp"

#include <cstring>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace degdiff {
namespace {

constexpr char kMagic[8] = {'D', 'D', 'P', 'A', 'T', 'H', 'S', '1'};

void check_batch(std::span<const PathSample> paths) {
  if (paths.empty()) throw std::invalid_argument("path batch is empty");
  const auto& first = paths.front();
  for (const auto& p : paths) {
    if (p.times != first.times || p.dim != first.dim || p.local_time.has_value() != first.local_time.has_value()) {
      throw std::invalid_argument("paths in a batch must share grid, dimension and local-time presence");
    }
    if (p.states.size() != p.times.size() * p.dim) throw std::invalid_argument("path state array has wrong size");
  }
}

std::string grid_description(const std::vector<double>& times) {
  std::ostringstream os;
  os << std::setprecision(17) << "n=" << times.size() << " t0=" << times.front() << " t1=" << times.back();
  return os.str();
}

}  // namespace

void write_paths_binary(const std::filesystem::path& file, std::span<const PathSample> paths,
                        const BatchHeader& header) {
  check_batch(paths);
  const auto& first = paths.front();
  nlohmann::json h = {{"alphas", header.alphas},
                      {"seed", header.seed},
                      {"scheme", header.scheme},
                      {"n_paths", paths.size()},
                      {"n_times", first.times.size()},
                      {"dim", first.dim},
                      {"has_local_time", first.local_time.has_value()},
                      {"grid", first.times}};
  const std::string text = h.dump();
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
  out.write(kMagic, sizeof kMagic);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof len);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  auto write_column = [&](auto getter) {
    for (std::size_t i = 0; i < first.dim; ++i) {
      for (const auto& p : paths) {
        for (std::size_t k = 0; k < p.times.size(); ++k) {
          const double v = getter(p, k, i);
          out.write(reinterpret_cast<const char*>(&v), sizeof v);
        }
      }
    }
  };
  write_column([](const PathSample& p, std::size_t k, std::size_t i) { return p.state(k, i); });
  if (first.local_time) write_column([](const PathSample& p, std::size_t k, std::size_t i) { return p.local(k, i); });
  if (!out) throw std::runtime_error("write failed for " + file.string());
}

std::vector<PathSample> read_paths_binary(const std::filesystem::path& file, BatchHeader* header) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw std::runtime_error("not a path batch file");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  const auto h = nlohmann::json::parse(text);
  const auto n_paths = h.at("n_paths").get<std::size_t>();
  const auto dim = h.at("dim").get<std::size_t>();
  const auto grid = h.at("grid").get<std::vector<double>>();
  const bool has_local = h.at("has_local_time").get<bool>();
  if (header) {
    header->alphas = h.at("alphas").get<std::vector<double>>();
    header->seed = h.at("seed").get<std::uint64_t>();
    header->scheme = h.at("scheme").get<std::string>();
  }
  std::vector<PathSample> paths(n_paths);
  for (auto& p : paths) {
    p.times = grid;
    p.dim = dim;
    p.states.assign(grid.size() * dim, 0.0);
    if (has_local) p.local_time.emplace(grid.size() * dim, 0.0);
    p.provenance.scheme = h.at("scheme").get<std::string>();
  }
  auto read_column = [&](auto setter) {
    for (std::size_t i = 0; i < dim; ++i) {
      for (auto& p : paths) {
        for (std::size_t k = 0; k < grid.size(); ++k) {
          double v;
          in.read(reinterpret_cast<char*>(&v), sizeof v);
          setter(p, k, i, v);
        }
      }
    }
  };
  read_column([](PathSample& p, std::size_t k, std::size_t i, double v) { p.states[k * p.dim + i] = v; });
  if (has_local) {
    read_column([](PathSample& p, std::size_t k, std::size_t i, double v) { (*p.local_time)[k * p.dim + i] = v; });
  }
  if (!in) throw std::runtime_error("truncated path batch file " + file.string());
  return paths;
}

void write_paths_csv(const std::filesystem::path& file, std::span<const PathSample> paths,
                     const BatchHeader& header) {
  check_batch(paths);
  const auto& first = paths.front();
  std::ofstream out(file);
  if (!out) throw std::runtime_error("cannot open " + file.string() + " for writing");
  out << std::setprecision(17);
  out << "# alpha=";
  for (std::size_t i = 0; i < header.alphas.size(); ++i) out << (i ? ";" : "") << header.alphas[i];
  out << "\n# seed=" << header.seed << "\n# n_paths=" << paths.size() << "\n# grid=" << grid_description(first.times)
      << "\n";
  out << "path,time";
  for (std::size_t i = 0; i < first.dim; ++i) out << ",x" << i;
  if (first.local_time) {
    for (std::size_t i = 0; i < first.dim; ++i) out << ",L" << i;
  }
  out << "\n";
  for (std::size_t n = 0; n < paths.size(); ++n) {
    const auto& p = paths[n];
    for (std::size_t k = 0; k < p.times.size(); ++k) {
      out << n << ',' << p.times[k];
      for (std::size_t i = 0; i < p.dim; ++i) out << ',' << p.state(k, i);
      if (p.local_time) {
        for (std::size_t i = 0; i < p.dim; ++i) out << ',' << p.local(k, i);
      }
      out << '\n';
    }
  }
}

}  // namespace degdiff
