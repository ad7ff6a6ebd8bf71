#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "config.hpp"

using namespace degdiff::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("degdiff_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

void write(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli_env(const std::string& env, const std::string& args) {
  const std::string cmd = env + " " + std::string(DEGDIFF_CLI_BINARY) + " --quiet " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

int run_cli(const std::string& args) { return run_cli_env("", args); }

template <class F>
std::string config_error(F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("syntax errors carry line and column") {
  const auto dir = scratch("syntax");
  write(dir / "bad.json", "{\n  \"seed\": 1,\n  \"model\": {\"a\": }\n}\n");
  const auto msg = config_error([&] { load_file((dir / "bad.json").string()); });
  CHECK(msg.find("bad.json:3:") != std::string::npos);
  CHECK(msg.find("syntax error") != std::string::npos);

  write(dir / "comments.json", "// header\n{\"seed\": 7 /* inline */}\n");
  CHECK(load_file((dir / "comments.json").string()).at("seed") == 7);
}

TEST_CASE("strict merge rejects unknown keys and type changes") {
  CHECK(config_error([] { resolve({{"modle", json::object()}}); }).find("'modle'") != std::string::npos);
  CHECK(config_error([] { resolve({{"model", {{"alfa", 1}}}}); }).find("'model.alfa'") != std::string::npos);
  CHECK(config_error([] { resolve({{"statistic", {{"etaz", {0.1}}}}}); }).find("statistic.etaz") !=
        std::string::npos);
  CHECK_FALSE(config_error([] { resolve({{"seed", "abc"}}); }).empty());
  CHECK_FALSE(config_error([] { resolve({{"scheme", {{"n_paths", 1.5}}}}); }).empty());
  CHECK_FALSE(config_error([] { resolve({{"scheme", {{"kind", "milstein"}}}}); }).empty());
  CHECK_FALSE(config_error([] { resolve({{"model", {{"alphas", {0.3, 0.5}}}}}); }).empty());
  CHECK_FALSE(config_error([] { resolve({{"command", "plot"}}); }).empty());
  CHECK(resolve({{"scheme", {{"dt", 1}}}}).at("scheme").at("dt") == 1);
}

TEST_CASE("dotted overrides") {
  json cfg = json::object();
  apply_override(cfg, "scheme.dt=1e-4");
  apply_override(cfg, "model.alphas=[0.3]");
  apply_override(cfg, "scheme.kind=euler");
  apply_override(cfg, "statistic.compare.seed=9");
  CHECK(cfg["scheme"]["dt"].get<double>() == doctest::Approx(1e-4));
  CHECK(cfg["model"]["alphas"] == json::array({0.3}));
  CHECK(cfg["scheme"]["kind"] == "euler");
  CHECK(cfg["statistic"]["compare"]["seed"] == 9);
  CHECK_THROWS_AS(apply_override(cfg, "noequals"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "a..b=1"), ConfigError);
  CHECK_THROWS_AS(apply_override(cfg, "scheme.dt.x=1"), ConfigError);
}

TEST_CASE("empty or incomplete statistic block is a config error") {
  const auto cfg = resolve({{"command", "occupation"}});
  CHECK_THROWS_AS(run_command(cfg, fs::temp_directory_path(), false), ConfigError);
  const auto partial = resolve({{"command", "occupation"}, {"statistic", {{"etas", {0.1}}}}});
  CHECK(config_error([&] { run_command(partial, fs::temp_directory_path(), false); }).find("statistic.K") !=
        std::string::npos);
}

TEST_CASE("density column integrates to one") {
  const auto cfg = resolve({{"command", "density"},
                            {"statistic", {{"times", {1.0}}, {"starts", {0.5, 1.0}}, {"y_max", 60.0}, {"y_points", 20000}}}});
  const auto o = run_command(cfg, fs::temp_directory_path(), false);
  REQUIRE(o.records.size() == 2);
  CHECK(o.pass);
  for (const auto& r : o.records) CHECK(std::abs(r.at("trapezoid_mass").get<double>() - 1.0) <= 1e-6);
  REQUIRE(o.tables.size() == 1);

  std::istringstream csv(o.tables[0].second);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "t,x,y,value");
  double mass = 0.0, py = 0.0, pv = 0.0;
  bool first = true;
  while (std::getline(csv, line)) {
    double t, x, y, v;
    char c;
    std::istringstream(line) >> t >> c >> x >> c >> y >> c >> v;
    if (x != 0.5) break;
    if (!first) mass += 0.5 * (v + pv) * (y - py);
    first = false;
    py = y;
    pv = v;
  }
  CHECK(std::abs(mass - 1.0) <= 1e-6);
}

TEST_CASE("function parsing") {
  const auto cfg = resolve({{"command", "krylov"},
                            {"scheme", {{"n_paths", 50}, {"T", 5.0}, {"dt", 1e-2}}},
                            {"statistic", {{"lambda", 2.0}, {"functions", {{{"kind", "bump"}, {"lo", {0.5}}, {"hi", {1.5}}, {"colour", 1}}}}}}});
  CHECK(config_error([&] { run_command(cfg, fs::temp_directory_path(), false); }).find("colour") != std::string::npos);
}

TEST_CASE("process exit codes") {
  const auto dir = scratch("exit");
  CHECK(run_cli("density --out " + dir.string()) == 2);
  write(dir / "bad.json", "{ \"seed\": ,}");
  CHECK(run_cli("--config " + (dir / "bad.json").string()) == 2);
  CHECK(run_cli("--set model.alfa=1 density") == 2);
  CHECK(run_cli("no-such-command") == 2);
  CHECK(run_cli("--out " + dir.string() +
                " density --set statistic.times=[1] --set statistic.starts=[1] --set statistic.y_max=60"
                " --set statistic.y_points=20000") == 0);
  CHECK(fs::exists(dir / "density.json"));
  CHECK(fs::exists(dir / "density.csv"));
  CHECK(fs::exists(dir / "density.meta.json"));
  // A far too coarse y grid misses the mass tolerance: statistical failure.
  CHECK(run_cli("--out " + dir.string() +
                " density --set statistic.times=[1] --set statistic.starts=[1] --set statistic.y_max=60"
                " --set statistic.y_points=20") == 1);
  const auto report = json::parse(slurp(dir / "density.json"));
  CHECK_FALSE(report.at("pass").get<bool>());
  CHECK(report.at("records")[0].contains("config"));
  CHECK(report.at("records")[0].contains("build_id"));
}

TEST_CASE("reports are byte-identical across runs and thread counts") {
  const auto dir = scratch("det");
  const auto occupation = [&](const std::string& threads) {
    REQUIRE(run_cli_env("DEGDIFF_THREADS=" + threads, "--out " + dir.string() +
                        " occupation --set 'statistic={\"etas\":[0.3,0.5],\"K\":2}' --set scheme.T=40"
                        " --set scheme.n_paths=400 --set scheme.dt=1e-2 --set model.x0=[0.5]") == 0);
    return slurp(dir / "occupation.json") + slurp(dir / "occupation.csv");
  };
  const auto first = occupation("1");
  CHECK(first == occupation("3"));
  CHECK(first == occupation("1"));
  CHECK(first.find("seconds") == std::string::npos);

  const auto sample = [&](const std::string& threads) {
    REQUIRE(run_cli_env("DEGDIFF_THREADS=" + threads,
                        "--out " + dir.string() +
                            " sample --set scheme.kind=euler --set scheme.n_paths=64 --set scheme.dt=1e-2"
                            " --set statistic.write_paths=8") == 0);
    return slurp(dir / "sample.json") + slurp(dir / "paths.bin") + slurp(dir / "paths.csv");
  };
  CHECK(sample("1") == sample("2"));
}
