#pragma once

#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

namespace degdiff::cli {

/// Any problem with the experiment configuration; maps to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

extern const std::vector<std::string> kCommands;

/// Built-in values for every block except `statistic`, whose keys are
/// command-specific and have no defaults.
nlohmann::json default_config();

/// Parses a JSON file (comments allowed). Syntax errors are reported as
/// "file:line:column: message".
nlohmann::json load_file(const std::string& path);

/// Applies "a.b.c=value" to the tree. The value is read as JSON when it
/// parses, otherwise as a string.
void apply_override(nlohmann::json& cfg, const std::string& assignment);

/// Layers `user` over the defaults, rejecting unknown keys and type changes
/// with the dotted path of the offending key.
nlohmann::json resolve(const nlohmann::json& user);

/// Required keys of the statistic block for one command. Throws ConfigError
/// when the block is empty or a key is missing.
void require_statistic(const nlohmann::json& cfg, const std::vector<std::string>& keys);

}  // namespace degdiff::cli
