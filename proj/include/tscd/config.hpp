#pragma once

// Run configuration: a JSON object with a fixed key set, string overrides of
// the form key=value applied after the file, and a canonical echo.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "tscd/core.hpp"

namespace tscd::config {

using nlohmann::json;

/// A configuration problem tied to one key.
class ConfigError : public InputError {
 public:
  ConfigError(std::string key, const std::string& what)
      : InputError("config key '" + key + "': " + what), key_(std::move(key)) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

struct RunConfig {
  std::string distribution = "gaussian_mean_shift";
  std::vector<double> snr_db{3.0};
  std::int64_t m = 500;
  std::int64_t n_max = 1000;
  std::int64_t runs = 2000;
  /// nullopt means "auto": a = c from the suggested rule, b calibrated.
  std::optional<double> a;
  std::optional<double> c;
  std::optional<double> b;
  double target_pfa = 0.05;
  std::uint64_t master_seed = 1;
};

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{"distribution", "snr_db", "m",          "n_max",
                                             "runs",         "a",      "c",          "b",
                                             "target_pfa",   "master_seed"};
  return keys;
}

namespace detail {

inline double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError(key, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(key, "expected a finite number");
  return d;
}

inline std::int64_t integer(const json& v, const std::string& key) {
  if (v.is_number_integer()) return v.get<std::int64_t>();
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (std::floor(d) == d && std::abs(d) < 9e15) return static_cast<std::int64_t>(d);
  }
  throw ConfigError(key, "expected an integer");
}

inline std::optional<double> number_or_auto(const json& v, const std::string& key) {
  if (v.is_string()) {
    if (v.get<std::string>() == "auto") return std::nullopt;
    throw ConfigError(key, "expected a number or \"auto\"");
  }
  return number(v, key);
}

inline json auto_or(const std::optional<double>& v) { return v ? json(*v) : json("auto"); }

}  // namespace detail

/// Parses `value` as JSON where possible, otherwise as a bare string.
inline json parse_override_value(const std::string& value) {
  auto parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded()) return json(value);
  return parsed;
}

/// Applies "key=value" to a JSON object; the key must be known.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError(assignment, "override must look like key=value");
  const std::string key = assignment.substr(0, eq);
  bool known = false;
  for (const auto& k : known_keys()) known = known || k == key;
  if (!known) throw ConfigError(key, "unknown key");
  doc[key] = parse_override_value(assignment.substr(eq + 1));
}

inline RunConfig from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("<root>", "configuration must be a JSON object");
  RunConfig cfg;
  for (const auto& [key, v] : doc.items()) {
    if (key == "distribution") {
      if (!v.is_string() || v.get<std::string>() != "gaussian_mean_shift")
        throw ConfigError(key, "only \"gaussian_mean_shift\" is supported");
      cfg.distribution = v.get<std::string>();
    } else if (key == "snr_db") {
      cfg.snr_db.clear();
      if (v.is_array()) {
        for (const auto& e : v) cfg.snr_db.push_back(detail::number(e, key));
      } else {
        cfg.snr_db.push_back(detail::number(v, key));
      }
      if (cfg.snr_db.empty()) throw ConfigError(key, "need at least one SNR");
    } else if (key == "m") {
      cfg.m = detail::integer(v, key);
    } else if (key == "n_max") {
      cfg.n_max = detail::integer(v, key);
    } else if (key == "runs") {
      cfg.runs = detail::integer(v, key);
    } else if (key == "a") {
      cfg.a = detail::number_or_auto(v, key);
    } else if (key == "c") {
      cfg.c = detail::number_or_auto(v, key);
    } else if (key == "b") {
      cfg.b = detail::number_or_auto(v, key);
    } else if (key == "target_pfa") {
      cfg.target_pfa = detail::number(v, key);
    } else if (key == "master_seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw ConfigError(key, "expected a non-negative integer");
      cfg.master_seed = v.get<std::uint64_t>();
    } else {
      throw ConfigError(key, "unknown key");
    }
  }
  if (cfg.m < 2) throw ConfigError("m", "change time must be >= 2");
  if (cfg.n_max < cfg.m) throw ConfigError("n_max", "must be >= m");
  if (cfg.runs < 100) throw ConfigError("runs", "need at least 100 runs");
  if (cfg.a && !(*cfg.a > 1.0)) throw ConfigError("a", "need a > 1");
  if (cfg.c && !(*cfg.c > 1.0)) throw ConfigError("c", "need c > 1");
  if (cfg.b && !(*cfg.b > 0.0)) throw ConfigError("b", "need b > 0");
  if (!(cfg.target_pfa > 0.0 && cfg.target_pfa < 1.0))
    throw ConfigError("target_pfa", "must lie in (0, 1)");
  return cfg;
}

inline json to_json(const RunConfig& cfg) {
  json doc;
  doc["distribution"] = cfg.distribution;
  doc["snr_db"] = cfg.snr_db;
  doc["m"] = cfg.m;
  doc["n_max"] = cfg.n_max;
  doc["runs"] = cfg.runs;
  doc["a"] = detail::auto_or(cfg.a);
  doc["c"] = detail::auto_or(cfg.c);
  doc["b"] = detail::auto_or(cfg.b);
  doc["target_pfa"] = cfg.target_pfa;
  doc["master_seed"] = cfg.master_seed;
  return doc;
}

inline json load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot open " + path);
  auto doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw ConfigError("<file>", "invalid JSON in " + path);
  return doc;
}

/// File (or empty), then overrides in order, then an explicit seed.
inline RunConfig resolve(const std::optional<std::string>& path,
                         const std::vector<std::string>& overrides,
                         std::optional<std::uint64_t> seed) {
  json doc = path ? load_file(*path) : json::object();
  if (!doc.is_object()) throw ConfigError("<root>", "configuration must be a JSON object");
  for (const auto& o : overrides) apply_override(doc, o);
  if (seed) doc["master_seed"] = *seed;
  return from_json(doc);
}

}  // namespace tscd::config
