// End-to-end acceptance run: drives the shipped CLI on the shipped default
// config and prints one PASS/FAIL line per criterion.
//
//   acceptance [--out DIR] [--subset 1,2,6]
//
// Criterion 10 combines the exit status and wall time of the full run with a
// determinism re-run of a subset under a different worker count, whose
// records must equal the corresponding records of the first run.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double kTimeBudgetSeconds = 45.0 * 60.0;

int shell(const std::string& cmd) {
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) return json();
  try {
    return json::parse(in);
  } catch (const json::exception&) {
    return json();
  }
}

json strip(json r) {
  r.erase("config");
  return r;
}

std::string summary(const json& rec) {
  std::ostringstream os;
  if (rec.contains("error")) return "error: " + rec.at("error").get<std::string>();
  int failed = 0;
  for (const auto& c : rec.at("checks")) {
    if (!c.at("pass").get<bool>()) {
      os << (failed++ ? "; " : "failed ") << c.at("name").get<std::string>();
    }
  }
  if (failed == 0) os << rec.at("checks").size() << " checks";
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  fs::path out = fs::current_path() / "acceptance_out";
  std::string subset = "1,2,6";
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string a = argv[i];
    if (a == "--out") out = argv[i + 1];
    else if (a == "--subset") subset = argv[i + 1];
  }
  const fs::path full = out / "full", again = out / "rerun";
  fs::remove_all(out);
  fs::create_directories(out);

  const std::string cli = std::string(DEGDIFF_CLI_BINARY) + " verify-all --config " + DEGDIFF_DEFAULT_CONFIG;
  const auto t0 = std::chrono::steady_clock::now();
  const int rc = shell(cli + " --out " + full.string());
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  const json report = read_json(full / "verify-all.json");
  std::map<int, json> by_id;
  if (report.is_object()) {
    for (const auto& r : report.at("records")) by_id[r.at("criterion").get<int>()] = r;
  }

  std::ostringstream lines;
  bool all = true;
  for (int id = 1; id <= 9; ++id) {
    const auto it = by_id.find(id);
    const bool pass = it != by_id.end() && it->second.at("pass").get<bool>();
    all = all && pass;
    lines << "criterion " << id << ": " << (pass ? "PASS" : "FAIL") << "  "
          << (it == by_id.end() ? std::string("missing from report")
                                : it->second.at("title").get<std::string>() + " (" + summary(it->second) + ")")
          << '\n';
  }

  const int rc2 = shell("DEGDIFF_THREADS=3 " + cli + " --quiet --out " + again.string() + " --set verify.criteria=[" +
                        subset + "]");
  const json rerun = read_json(again / "verify-all.json");
  bool deterministic = rc2 == 0 && rerun.is_object() && !rerun.at("records").empty();
  if (deterministic) {
    for (const auto& r : rerun.at("records")) {
      const auto it = by_id.find(r.at("criterion").get<int>());
      deterministic = deterministic && it != by_id.end() && strip(it->second) == strip(r);
    }
  }
  const bool complete = by_id.size() == 9;
  const bool c10 = rc == 0 && complete && seconds < kTimeBudgetSeconds && deterministic;
  all = all && c10;
  lines << "criterion 10: " << (c10 ? "PASS" : "FAIL") << "  verify-all exit " << rc << ", " << by_id.size()
        << "/9 criteria reported, " << static_cast<long>(seconds) << " s (budget "
        << static_cast<long>(kTimeBudgetSeconds) << " s), re-run of {" << subset << "} with 3 workers "
        << (deterministic ? "identical" : "DIFFERS") << '\n';
  std::cout << lines.str() << std::flush;
  std::ofstream(out / "acceptance_summary.txt") << lines.str();
  return all ? 0 : 1;
}
