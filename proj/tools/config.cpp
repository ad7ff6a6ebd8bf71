#include "config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "degdiff/verify.hpp"

namespace degdiff::cli {

using nlohmann::json;

const std::vector<std::string> kCommands = {"density", "bounds",        "sample", "occupation", "upcrossings",
                                            "krylov",  "boundary",      "submartingale", "theta", "verify-all"};

namespace {

enum class Kind { number, integer, boolean, string, numbers, array, object };

const std::map<std::string, Kind>& statistic_schema() {
  static const std::map<std::string, Kind> s = {
      {"times", Kind::numbers},   {"starts", Kind::numbers},      {"y_max", Kind::number},
      {"y_points", Kind::integer}, {"x_min", Kind::number},        {"x_max", Kind::number},
      {"points", Kind::integer},  {"lambdas", Kind::numbers},     {"p", Kind::numbers},
      {"widths", Kind::numbers},  {"nodes", Kind::integer},       {"etas", Kind::numbers},
      {"K", Kind::number},        {"gammas", Kind::numbers},      {"floor_fraction", Kind::number},
      {"coordinate", Kind::integer}, {"min_count", Kind::integer}, {"lambda", Kind::number},
      {"p0", Kind::number},       {"functions", Kind::array},     {"tols", Kind::numbers},
      {"s", Kind::number},        {"t", Kind::number},            {"weights", Kind::array},
      {"M", Kind::number},        {"compare", Kind::object},      {"paired", Kind::boolean},
      {"bootstrap", Kind::integer}, {"write_paths", Kind::integer},
  };
  return s;
}

bool matches(Kind k, const json& v) {
  switch (k) {
    case Kind::number: return v.is_number();
    case Kind::integer: return v.is_number_integer();
    case Kind::boolean: return v.is_boolean();
    case Kind::string: return v.is_string();
    case Kind::array: return v.is_array();
    case Kind::object: return v.is_object();
    case Kind::numbers:
      if (!v.is_array()) return false;
      for (const auto& e : v) {
        if (!e.is_number()) return false;
      }
      return true;
  }
  return false;
}

std::string type_name(const json& v) {
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  return v.type_name();
}

// A value may replace a default when it has the same JSON type; integers are
// accepted where floats are expected but not the other way round.
bool compatible(const json& def, const json& v) {
  if (def.is_number_integer()) return v.is_number_integer();
  if (def.is_number()) return v.is_number();
  if (def.type() != v.type()) return false;
  if (def.is_array() && !def.empty()) {
    for (const auto& e : v) {
      if (!compatible(def.front(), e)) return false;
    }
  }
  return true;
}

void merge(json& dst, const json& src, const std::string& path) {
  if (!src.is_object()) throw ConfigError("config: '" + path + "' must be an object");
  for (const auto& [key, value] : src.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (where == "statistic") {
      if (!value.is_object()) throw ConfigError("config: 'statistic' must be an object");
      for (const auto& [sk, sv] : value.items()) {
        const auto it = statistic_schema().find(sk);
        if (it == statistic_schema().end()) throw ConfigError("config: unknown key 'statistic." + sk + "'");
        if (!matches(it->second, sv)) throw ConfigError("config: 'statistic." + sk + "' has the wrong type");
      }
      dst[key] = value;
      continue;
    }
    if (!dst.contains(key)) throw ConfigError("config: unknown key '" + where + "'");
    json& d = dst[key];
    if (d.is_object()) {
      merge(d, value, where);
    } else if (!compatible(d, value)) {
      throw ConfigError("config: '" + where + "' expects " + type_name(d) + ", got " + type_name(value));
    } else {
      d = value;
    }
  }
}

}  // namespace

json default_config() {
  json c = {
      {"command", "verify-all"},
      {"seed", 20260101},
      {"threads", 0},
      {"model",
       {{"d", 1}, {"alphas", {0.5}}, {"coefficients", "constant"}, {"a", 1.0}, {"b", 0.0}, {"epsilon", 0.0},
        {"x0", {1.0}}}},
      {"scheme",
       {{"kind", "exact"}, {"dt", 1e-3}, {"stride", 1}, {"T", 1.0}, {"n_paths", 10000}, {"projection", "reflect"}}},
      {"statistic", json::object()},
      {"output", {{"directory", "results"}, {"formats", {"json", "csv"}}, {"ledger", "ledger.jsonl"}}},
      {"verify", default_verify_settings()},
  };
  return c;
}

json load_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  try {
    return json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    if (const auto p = msg.find("syntax error"); p != std::string::npos) msg = msg.substr(p);
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + msg);
  }
}

void apply_override(json& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &cfg;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("--set: empty path component in '" + key + "'");
    if (!node->is_object()) throw ConfigError("--set: '" + key + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

json resolve(const json& user) {
  json cfg = default_config();
  merge(cfg, user, "");
  const auto& m = cfg["model"];
  if (m["d"].get<std::size_t>() != m["alphas"].size() || m["x0"].size() != m["alphas"].size()) {
    throw ConfigError("config: model.d, model.alphas and model.x0 disagree in dimension");
  }
  const auto cmd = cfg["command"].get<std::string>();
  if (std::find(kCommands.begin(), kCommands.end(), cmd) == kCommands.end()) {
    throw ConfigError("config: unknown command '" + cmd + "'");
  }
  for (const auto& k : {"kind", "projection", "coefficients"}) {
    const auto& blk = std::string(k) == "coefficients" ? cfg["model"] : cfg["scheme"];
    const auto v = blk[k].get<std::string>();
    const bool ok = (std::string(k) == "kind" && (v == "exact" || v == "euler")) ||
                    (std::string(k) == "projection" && (v == "reflect" || v == "truncate")) ||
                    (std::string(k) == "coefficients" && (v == "constant" || v == "affine"));
    if (!ok) throw ConfigError("config: invalid value '" + v + "' for " + k);
  }
  return cfg;
}

void require_statistic(const json& cfg, const std::vector<std::string>& keys) {
  const auto& s = cfg.at("statistic");
  if (s.empty()) throw ConfigError("config: the statistic block is empty; nothing to run");
  for (const auto& k : keys) {
    if (!s.contains(k)) throw ConfigError("config: statistic." + k + " is required for this command");
  }
}

}  // namespace degdiff::cli
