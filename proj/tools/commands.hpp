#pragma once

#include <cstdint>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <utility>
#include <vector>

namespace degdiff::cli {

struct Outcome {
  nlohmann::json records = nlohmann::json::array();
  bool pass = true;
  bool numerical_failure = false;
  std::vector<std::pair<std::string, std::string>> tables;  // file name, CSV text
  nlohmann::json timing = nlohmann::json::object();         // metadata only
  std::filesystem::path binary;                             // extra artifact, if any
};

/// Runs cfg["command"] on a resolved config, writing binary artifacts under
/// `out`. Throws ConfigError for missing statistic keys.
Outcome run_command(const nlohmann::json& cfg, const std::filesystem::path& out, bool progress);

}  // namespace degdiff::cli
