#include <CLI11.hpp>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"
#include "degdiff/parallel.hpp"
#include "degdiff/quadrature.hpp"
#include "degdiff/sde.hpp"
#include "degdiff/version.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace degdiff::cli;

void write_text(const fs::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(file.string() + ": cannot write");
  out << text;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

int run(int argc, char** argv) {
  CLI::App app{"Degenerate diffusion experiments: kernels, samplers, schemes, operators and estimators."};
  std::string command, config_path, out_dir;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool quiet = false, print_config = false;
  app.add_option("command", command, "Subcommand; overrides the config's 'command'")
      ->check(CLI::IsMember(kCommands));
  app.add_option("--config", config_path, "Experiment config file (JSON, comments allowed)");
  app.add_option("--set", sets, "Override a config value by dotted path, e.g. scheme.dt=1e-4")->take_all();
  app.add_option("--seed", seed, "Master seed");
  app.add_option("--out", out_dir, "Output directory (default: output.directory)");
  app.add_option("--threads", threads, "Worker threads; 0 uses DEGDIFF_THREADS or the hardware count");
  app.add_flag("--quiet", quiet, "Suppress progress on stderr");
  app.add_flag("--print-config", print_config, "Print the resolved config as JSON and exit");
  app.add_flag_callback(
      "--version", [] { throw CLI::CallForVersion(std::string(degdiff::kVersion) + " (" + degdiff::kBuildId + ")", 0); },
      "Print version and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForVersion& e) {
    std::cout << e.what() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  json user = config_path.empty() ? json::object() : load_file(config_path);
  for (const auto& s : sets) apply_override(user, s);
  if (!command.empty()) user["command"] = command;
  if (seed) user["seed"] = *seed;
  if (threads) user["threads"] = *threads;
  if (!out_dir.empty()) user["output"]["directory"] = out_dir;
  const json cfg = resolve(user);
  if (print_config) {
    std::cout << cfg.dump(2) << '\n';
    return 0;
  }

  degdiff::set_thread_count(cfg.at("threads").get<unsigned>());
  const fs::path out = cfg.at("output").at("directory").get<std::string>();
  fs::create_directories(out);
  const auto cmd = cfg.at("command").get<std::string>();

  const auto t0 = std::chrono::steady_clock::now();
  Outcome o = run_command(cfg, out, !quiet);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json echoed = cfg;
  if (cmd != "verify-all") echoed.erase("verify");
  for (auto& r : o.records) {
    r["command"] = cmd;
    r["build_id"] = degdiff::kBuildId;
    r["config"] = echoed;
  }
  const json report = {{"command", cmd},         {"version", degdiff::kVersion}, {"build_id", degdiff::kBuildId},
                       {"seed", cfg.at("seed")}, {"pass", o.pass},              {"records", o.records}};
  const auto& formats = cfg.at("output").at("formats");
  const auto wants = [&](const char* f) { return std::find(formats.begin(), formats.end(), f) != formats.end(); };
  if (wants("json")) write_text(out / (cmd + ".json"), report.dump(2) + "\n");
  if (wants("csv")) {
    for (const auto& [name, text] : o.tables) write_text(out / name, text);
  }
  json meta = {{"command", cmd}, {"started_utc", utc_now()}, {"seconds", seconds},
               {"threads", degdiff::thread_count()}, {"per_item_seconds", o.timing}};
  if (!o.binary.empty()) meta["binary"] = o.binary.filename().string();
  write_text(out / (cmd + ".meta.json"), meta.dump(2) + "\n");

  const auto ledger_name = cfg.at("output").at("ledger").get<std::string>();
  if (!ledger_name.empty()) {
    std::ofstream ledger(out / ledger_name, std::ios::app);
    for (const auto& r : o.records) ledger << r.dump() << '\n';
  }

  if (!quiet) {
    std::cerr << cmd << ": " << (o.pass ? "PASS" : "FAIL") << " (" << o.records.size() << " records, " << seconds
              << " s) -> " << out.string() << '\n';
  }
  if (o.numerical_failure) return 3;
  return o.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const degdiff::numerical_failure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const degdiff::model_contract_violation& e) {
    std::cerr << "model contract violation: " << e.what() << '\n';
    return 3;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: config: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "fatal: " << e.what() << '\n';
    return 3;
  }
}
