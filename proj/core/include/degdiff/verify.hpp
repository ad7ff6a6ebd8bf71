#pragma once

// The acceptance suite: criteria 1-9 as library calls driven by one JSON
// settings tree. Every criterion draws from its own salted streams, so each
// record depends only on (settings, seed) and not on which other criteria run
// or on the thread count.

#include <functional>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

namespace degdiff {

struct Check {
  std::string name;
  bool pass = false;
  nlohmann::json evidence = nlohmann::json::object();
};

struct CriterionResult {
  int id = 0;
  std::string title;
  std::vector<Check> checks;
  std::string error;               // set when the criterion aborted
  bool numerical_failure = false;  // error came from a quadrature or operator miss
  double seconds = 0.0;            // wall time, kept out of to_json

  bool pass() const;
  /// Deterministic record: no timing.
  nlohmann::json to_json() const;
};

/// Default settings for every criterion, keyed "c1" ... "c9" plus "criteria".
nlohmann::json default_verify_settings();

std::string criterion_title(int id);

/// Runs one criterion. Exceptions are caught into the result.
CriterionResult run_criterion(int id, const nlohmann::json& settings, std::uint64_t seed);

/// Runs settings["criteria"] in order, calling `progress` after each.
std::vector<CriterionResult> run_verify(const nlohmann::json& settings, std::uint64_t seed,
                                        const std::function<void(const CriterionResult&)>& progress = {});

}  // namespace degdiff
