#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "conecraft/geometry.hpp"
#include "conecraft/model.hpp"
#include "json.hpp"

namespace conecraft {

// Configuration grammar (UTF-8, one item per line):
//
//   # comment                      (also after a value)
//   key = value                    top-level keys: kind, seed, output, threads
//   [section]                      cone, model, or the section named by `kind`
//   key = value
//
// Values are numbers (17-digit round trip), true/false, bare words, vectors
// [a, b, ...] or matrices [[a, b], [c, d]] written on one line.

using ConfigValue =
    std::variant<double, bool, std::string, std::vector<double>, std::vector<std::vector<double>>>;

/// One resolved section: every schema key with its parsed or default value;
/// keys without a default that were not given are absent.
class ConfigSection {
 public:
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  double number(const std::string& key) const;
  std::optional<double> optional_number(const std::string& key) const;
  std::uint64_t integer(const std::string& key) const;
  bool flag(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  const std::vector<double>& vector(const std::string& key) const;
  const std::vector<std::vector<double>>& matrix(const std::string& key) const;
  /// Source line of a key, 0 for defaults.
  int line(const std::string& key) const;

  void set(const std::string& key, ConfigValue value, int line);
  const std::map<std::string, ConfigValue>& values() const { return values_; }

 private:
  std::map<std::string, ConfigValue> values_;
  std::map<std::string, int> lines_;
};

struct ExperimentConfig {
  std::string kind;
  std::uint64_t seed = 0;
  std::string output = "out";
  unsigned threads = 1;
  ConfigSection cone;
  ConfigSection model;
  ConfigSection params;

  /// Resolved configuration (defaults filled) as JSON.
  nlohmann::json echo() const;
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> kinds{"validate", "sp_solve",     "simulate", "flow",
                                              "minorization", "killed_floor", "leveling", "psi_gap",
                                              "scaling_check"};
  return kinds;
}

/// Parses and validates. Throws Error(Parse) listing every syntax problem with
/// its line number, or Error(Validate) naming the first violated rule.
ExperimentConfig parse_config(const std::string& text);

PolyhedralCone build_cone(const ExperimentConfig& config);
/// The model at the configured epsilon (or the first grid value).
DiffusionModel build_model(const ExperimentConfig& config);
/// The epsilon grid; a single-entry grid {epsilon} when no grid is given.
std::vector<double> epsilon_grid(const ExperimentConfig& config);

}  // namespace conecraft
