#include "conecraft/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include "conecraft/errors.hpp"
#include "conecraft/setups.hpp"

namespace conecraft {
namespace {

enum class Type { Number, Integer, Bool, Word, Vector, Matrix };

struct KeySpec {
  std::string key;
  Type type;
  std::optional<ConfigValue> fallback;
};

using Schema = std::vector<KeySpec>;

const char* type_name(Type t) {
  switch (t) {
    case Type::Number: return "number";
    case Type::Integer: return "integer";
    case Type::Bool: return "true/false";
    case Type::Word: return "word";
    case Type::Vector: return "vector";
    case Type::Matrix: return "matrix";
  }
  return "value";
}

KeySpec num(std::string k, std::optional<double> d = std::nullopt) {
  return {std::move(k), Type::Number, d ? std::optional<ConfigValue>(*d) : std::nullopt};
}
KeySpec integer(std::string k, std::optional<double> d = std::nullopt) {
  return {std::move(k), Type::Integer, d ? std::optional<ConfigValue>(*d) : std::nullopt};
}
KeySpec flag(std::string k, bool d) { return {std::move(k), Type::Bool, ConfigValue(d)}; }
KeySpec word(std::string k, std::optional<std::string> d = std::nullopt) {
  return {std::move(k), Type::Word, d ? std::optional<ConfigValue>(*d) : std::nullopt};
}
KeySpec vec(std::string k, std::optional<std::vector<double>> d = std::nullopt) {
  return {std::move(k), Type::Vector, d ? std::optional<ConfigValue>(*d) : std::nullopt};
}
KeySpec mat(std::string k) { return {std::move(k), Type::Matrix, std::nullopt}; }

Schema exit_schema() {
  return {num("domain_radius", 1.0), vec("x"), vec("y"), num("replicas", 10000.0), num("dt", 1e-3),
          num("horizon", 100.0), integer("max_doublings", 3), integer("batch", 1024),
          num("b0_gamma", 1e-6), num("flow_t_max", 1000.0), num("flow_dt", 1e-3)};
}

const std::map<std::string, Schema>& schemas() {
  static const std::map<std::string, Schema> table = [] {
    std::map<std::string, Schema> s;
    s["cone"] = {word("preset", "orthant"), integer("dim", 2), mat("normals"), mat("directions"),
                 flag("normalize", false)};
    s["model"] = {word("drift", "reference"), vec("drift_vector"), word("dispersion", "identity"),
                  mat("dispersion_matrix"), num("epsilon", 1.0), vec("epsilon_grid"), num("gamma1"),
                  num("gamma2"), num("sigma_lower")};
    s["validate"] = {integer("model_pairs", 10000), num("delta", 0.0), integer("stability_points", 100)};
    s["sp_solve"] = {vec("times"), mat("values"), word("path_csv"), num("refine", 1e-3),
                     integer("lipschitz_pairs", 0), integer("breakpoints", 20), num("perturbation", 0.1)};
    s["simulate"] = {vec("x0"), num("horizon", 1.0), num("dt", 1e-3), integer("replicas", 1),
                     integer("dump_paths", 1), flag("save_increments", false), flag("scaled", false)};
    s["flow"] = {vec("x0"), num("horizon", 1.0), num("dt", 1e-3), num("domain_radius"),
                 num("gamma", 0.0), num("t_max", 100.0)};
    s["minorization"] = {num("t1", 1.0), num("t2"), num("M", 2.0), num("M1", 1.0), vec("x0"),
                         num("r0", 0.1), num("r1", 0.2), num("r2", 0.3), num("target_radius"),
                         integer("lattice", 9), integer("bins", 4), integer("replicas", 10000),
                         num("dt", 1e-3), num("kappa_min"), flag("compose", false),
                         integer("batch", 1024)};
    s["killed_floor"] = {vec("center"), num("radius", 1.0), num("gamma", 0.5), num("t", 0.25),
                         integer("lattice", 5), integer("bins", 4), integer("replicas", 10000),
                         num("dt", 1e-3), num("kappa_min"), integer("batch", 1024)};
    Schema lev = exit_schema();
    lev.push_back(word("f", "indicator"));
    lev.push_back(vec("f_normal"));
    lev.push_back(num("f_offset", 0.0));
    lev.push_back(num("f_value", 1.0));
    s["leveling"] = lev;
    Schema psi = exit_schema();
    psi.push_back(word("psi", "log_envelope"));
    psi.push_back(num("psi_q", 0.5));
    psi.push_back(num("psi_m", 1.0));
    psi.push_back(num("psi_value", 1.0));
    psi.push_back(num("probe_horizon", 1e6));
    psi.push_back(num("psi_bound"));
    s["psi_gap"] = psi;
    s["scaling_check"] = {vec("xbar"), num("horizon", 1.0), vec("dt_grid", std::vector<double>{1e-3, 1e-4}),
                          integer("paths", 100), num("factor", 5.0)};
    return s;
  }();
  return table;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  if (begin != end && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

// Splits "a, b, c" at top-level commas.
std::vector<std::string> split_list(const std::string& inner) {
  std::vector<std::string> out;
  int depth = 0;
  std::string current;
  for (char c : inner) {
    if (c == '[') ++depth;
    if (c == ']') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(trim(current));
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!trim(current).empty() || !out.empty()) out.push_back(trim(current));
  return out;
}

std::optional<std::vector<double>> parse_vector(const std::string& s) {
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') return std::nullopt;
  std::vector<double> out;
  for (const auto& item : split_list(s.substr(1, s.size() - 2))) {
    const auto v = parse_number(item);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  return out;
}

std::optional<std::vector<std::vector<double>>> parse_matrix(const std::string& s) {
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') return std::nullopt;
  std::vector<std::vector<double>> out;
  for (const auto& item : split_list(s.substr(1, s.size() - 2))) {
    const auto row = parse_vector(item);
    if (!row) return std::nullopt;
    out.push_back(*row);
  }
  return out;
}

bool is_word(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' || c == '/' || c == ':';
  });
}

std::optional<ConfigValue> convert(const std::string& raw, Type type) {
  switch (type) {
    case Type::Number:
      if (auto v = parse_number(raw)) return ConfigValue(*v);
      return std::nullopt;
    case Type::Integer:
      if (auto v = parse_number(raw); v && *v >= 0.0 && std::floor(*v) == *v && *v < 9.007199254740992e15)
        return ConfigValue(*v);
      return std::nullopt;
    case Type::Bool:
      if (raw == "true") return ConfigValue(true);
      if (raw == "false") return ConfigValue(false);
      return std::nullopt;
    case Type::Word:
      if (is_word(raw)) return ConfigValue(raw);
      return std::nullopt;
    case Type::Vector:
      if (auto v = parse_vector(raw)) return ConfigValue(*v);
      return std::nullopt;
    case Type::Matrix:
      if (auto m = parse_matrix(raw)) return ConfigValue(*m);
      return std::nullopt;
  }
  return std::nullopt;
}

nlohmann::json value_json(const ConfigValue& v) {
  return std::visit([](const auto& x) { return nlohmann::json(x); }, v);
}

void validate_rule(bool ok, const std::string& rule) {
  if (!ok) fail(ErrorCode::Validate, rule);
}

}  // namespace

double ConfigSection::number(const std::string& key) const {
  const auto it = values_.find(key);
  require(it != values_.end(), ErrorCode::Validate, "missing required key '" + key + "'");
  return std::get<double>(it->second);
}

std::optional<double> ConfigSection::optional_number(const std::string& key) const {
  if (!has(key)) return std::nullopt;
  return number(key);
}

std::uint64_t ConfigSection::integer(const std::string& key) const {
  return static_cast<std::uint64_t>(number(key));
}

bool ConfigSection::flag(const std::string& key) const {
  const auto it = values_.find(key);
  require(it != values_.end(), ErrorCode::Validate, "missing required key '" + key + "'");
  return std::get<bool>(it->second);
}

const std::string& ConfigSection::text(const std::string& key) const {
  const auto it = values_.find(key);
  require(it != values_.end(), ErrorCode::Validate, "missing required key '" + key + "'");
  return std::get<std::string>(it->second);
}

const std::vector<double>& ConfigSection::vector(const std::string& key) const {
  const auto it = values_.find(key);
  require(it != values_.end(), ErrorCode::Validate, "missing required key '" + key + "'");
  return std::get<std::vector<double>>(it->second);
}

const std::vector<std::vector<double>>& ConfigSection::matrix(const std::string& key) const {
  const auto it = values_.find(key);
  require(it != values_.end(), ErrorCode::Validate, "missing required key '" + key + "'");
  return std::get<std::vector<std::vector<double>>>(it->second);
}

int ConfigSection::line(const std::string& key) const {
  const auto it = lines_.find(key);
  return it == lines_.end() ? 0 : it->second;
}

void ConfigSection::set(const std::string& key, ConfigValue value, int line) {
  values_[key] = std::move(value);
  lines_[key] = line;
}

nlohmann::json ExperimentConfig::echo() const {
  auto section = [](const ConfigSection& s) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [k, v] : s.values()) out[k] = value_json(v);
    return out;
  };
  return {{"kind", kind},      {"seed", seed},           {"output", output}, {"threads", threads},
          {"cone", section(cone)}, {"model", section(model)}, {kind, section(params)}};
}

ExperimentConfig parse_config(const std::string& text) {
  std::vector<std::string> errors;
  auto error = [&](int line, const std::string& msg) {
    errors.push_back("line " + std::to_string(line) + ": " + msg);
  };

  struct Raw {
    std::string value;
    int line;
  };
  std::map<std::string, std::map<std::string, Raw>> raw;  // section -> key -> value
  std::map<std::string, int> section_lines;
  std::string section;  // "" is the top level
  std::istringstream in(text);
  std::string line_text;
  int line_no = 0;
  while (std::getline(in, line_text)) {
    ++line_no;
    const auto hash = line_text.find('#');
    const std::string line = trim(hash == std::string::npos ? line_text : line_text.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.front() == '[' && line.back() == ']') {
        section = trim(line.substr(1, line.size() - 2));
        const bool known = section == "cone" || section == "model" || schemas().count(section) > 0;
        if (!known) {
          error(line_no, "unknown section [" + section + "]");
        } else if (section_lines.count(section)) {
          error(line_no, "duplicate section [" + section + "]");
        }
        section_lines[section] = line_no;
      } else {
        error(line_no, "expected 'key = value' or '[section]'");
      }
      continue;
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      error(line_no, "empty key or value");
      continue;
    }
    auto& bucket = raw[section];
    if (bucket.count(key)) {
      error(line_no, "duplicate key '" + key + "' (first on line " + std::to_string(bucket[key].line) + ")");
      continue;
    }
    bucket[key] = Raw{value, line_no};
  }

  ExperimentConfig config;
  // Top level.
  for (const auto& [key, item] : raw[""]) {
    if (key == "kind") {
      if (std::find(experiment_kinds().begin(), experiment_kinds().end(), item.value) ==
          experiment_kinds().end())
        error(item.line, "unknown kind '" + item.value + "'");
      config.kind = item.value;
    } else if (key == "seed") {
      std::uint64_t seed = 0;
      const auto res = std::from_chars(item.value.data(), item.value.data() + item.value.size(), seed);
      if (res.ec != std::errc() || res.ptr != item.value.data() + item.value.size())
        error(item.line, "seed must be an unsigned 64-bit integer");
      config.seed = seed;
    } else if (key == "output") {
      config.output = item.value;
    } else if (key == "threads") {
      const auto v = convert(item.value, Type::Integer);
      if (!v) error(item.line, "threads must be a nonnegative integer");
      else config.threads = static_cast<unsigned>(std::get<double>(*v));
    } else {
      error(item.line, "unknown key '" + key + "'");
    }
  }
  if (!raw[""].count("kind")) errors.push_back("missing required key 'kind'");
  if (!raw[""].count("seed")) errors.push_back("missing required key 'seed' (runs must be reproducible)");
  for (const auto& [name, line] : section_lines)
    if (name != "cone" && name != "model" && !config.kind.empty() && name != config.kind)
      error(line, "section [" + name + "] does not match kind '" + config.kind + "'");

  auto fill = [&](const std::string& name, ConfigSection& target) {
    const auto it = schemas().find(name);
    const Schema& schema = it->second;
    for (const auto& [key, item] : raw[name]) {
      const auto spec = std::find_if(schema.begin(), schema.end(), [&](const KeySpec& s) { return s.key == key; });
      if (spec == schema.end()) {
        error(item.line, "unknown key '" + key + "' in [" + name + "]");
        continue;
      }
      const auto value = convert(item.value, spec->type);
      if (!value) {
        error(item.line, "key '" + key + "' expects a " + type_name(spec->type));
        continue;
      }
      target.set(key, *value, item.line);
    }
    for (const auto& spec : schema)
      if (!target.has(spec.key) && spec.fallback) target.set(spec.key, *spec.fallback, 0);
  };
  fill("cone", config.cone);
  fill("model", config.model);
  if (schemas().count(config.kind)) fill(config.kind, config.params);

  if (!errors.empty()) {
    std::ostringstream msg;
    for (std::size_t i = 0; i < errors.size(); ++i) msg << (i ? "\n" : "") << errors[i];
    fail(ErrorCode::Parse, msg.str());
  }

  // Semantic checks: everything the run will construct must construct.
  try {
    const PolyhedralCone cone = build_cone(config);
    const DiffusionModel model = build_model(config);
    validate_kind(config, cone, model);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Validate) throw;
    fail(ErrorCode::Validate, std::string(to_string(e.code())) + ": " + e.what());
  }
  return config;
}

PolyhedralCone build_cone(const ExperimentConfig& config) {
  const ConfigSection& c = config.cone;
  const std::string& preset = c.text("preset");
  if (preset == "orthant" || preset == "halfline") {
    const int dim = preset == "halfline" ? 1 : static_cast<int>(c.integer("dim"));
    validate_rule(dim >= 1 && dim <= kMaxDim, "cone dim must lie in [1, " + std::to_string(kMaxDim) + "]");
    validate_rule(!c.has("normals") && !c.has("directions"),
                  "normals/directions are only allowed with preset = custom");
    const PolyhedralCone cone = PolyhedralCone::orthant(dim);
    require_valid(cone);
    return cone;
  }
  validate_rule(preset == "custom", "cone preset must be orthant, halfline or custom");
  validate_rule(c.has("normals") && c.has("directions"), "custom cone needs normals and directions");
  const auto& normals = c.matrix("normals");
  const auto& directions = c.matrix("directions");
  validate_rule(!normals.empty() && normals.size() == directions.size(),
                "normals and directions must list the same number of faces");
  validate_rule(normals.size() <= static_cast<std::size_t>(kMaxFaces),
                "at most " + std::to_string(kMaxFaces) + " faces");
  const auto dim = normals.front().size();
  validate_rule(dim >= 1 && dim <= static_cast<std::size_t>(kMaxDim), "cone dimension out of range");
  std::vector<Vec> n, d;
  const bool normalize = c.flag("normalize");
  for (std::size_t i = 0; i < normals.size(); ++i) {
    validate_rule(normals[i].size() == dim && directions[i].size() == dim,
                  "face " + std::to_string(i + 1) + " has the wrong dimension");
    Vec a = Eigen::Map<const Eigen::VectorXd>(normals[i].data(), static_cast<Eigen::Index>(dim));
    Vec b = Eigen::Map<const Eigen::VectorXd>(directions[i].data(), static_cast<Eigen::Index>(dim));
    if (normalize) {
      validate_rule(a.norm() > 0.0 && b.norm() > 0.0, "face " + std::to_string(i + 1) + " has a zero vector");
      a /= a.norm();
      b /= b.norm();
    }
    n.push_back(a);
    d.push_back(b);
  }
  const PolyhedralCone cone(static_cast<int>(dim), n, d);
  require_valid(cone);
  return cone;
}

std::vector<double> epsilon_grid(const ExperimentConfig& config) {
  if (config.model.has("epsilon_grid")) return config.model.vector("epsilon_grid");
  return {config.model.number("epsilon")};
}

DiffusionModel build_model(const ExperimentConfig& config) {
  const ConfigSection& m = config.model;
  const int dim = build_cone(config).dim();
  const std::vector<double> grid = epsilon_grid(config);
  validate_rule(!grid.empty(), "epsilon_grid must not be empty");
  for (double e : grid) validate_rule(e >= 0.0, "epsilon values must be nonnegative");
  const double eps = grid.front();
  const std::string& drift = m.text("drift");
  const std::string& dispersion = m.text("dispersion");

  std::optional<DiffusionModel> model;
  if (drift == "lipschitz2d") {
    validate_rule(dim == 2, "the lipschitz2d model needs a 2-D cone");
    validate_rule(dispersion == "identity" || dispersion == "lipschitz2d",
                  "the lipschitz2d model carries its own dispersion");
    model = models::lipschitz2d(eps);
  } else {
    Vec b;
    if (drift == "reference") {
      validate_rule(!m.has("drift_vector"), "drift_vector is only used with drift = constant");
      b = models::reference(dim, eps).drift(Vec::Zero(dim));
    } else {
      validate_rule(drift == "constant", "drift must be reference, constant or lipschitz2d");
      validate_rule(m.has("drift_vector"), "drift = constant needs drift_vector");
      const auto& v = m.vector("drift_vector");
      validate_rule(static_cast<int>(v.size()) == dim, "drift_vector must have the cone dimension");
      b = Eigen::Map<const Eigen::VectorXd>(v.data(), dim);
    }
    Mat s = Mat::Identity(dim, dim);
    if (dispersion == "constant") {
      validate_rule(m.has("dispersion_matrix"), "dispersion = constant needs dispersion_matrix");
      const auto& rows = m.matrix("dispersion_matrix");
      validate_rule(static_cast<int>(rows.size()) == dim, "dispersion_matrix must be k x k");
      for (int i = 0; i < dim; ++i) {
        validate_rule(static_cast<int>(rows[static_cast<std::size_t>(i)].size()) == dim,
                      "dispersion_matrix must be k x k");
        for (int j = 0; j < dim; ++j) s(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      }
    } else {
      validate_rule(dispersion == "identity", "dispersion must be identity or constant here");
    }
    // Declared constants default to the exact values for constant coefficients.
    ModelConstants c;
    c.gamma1 = std::max(b.norm(), 1e-300);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd{Eigen::MatrixXd(s)};
    c.gamma2 = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    c.sigma_lower = smin * smin;
    model = DiffusionModel::constant(b, s, eps, c, drift == "reference" ? "reference" : "constant");
  }
  ModelConstants c = model->constants();
  if (m.has("gamma1")) c.gamma1 = m.number("gamma1");
  if (m.has("gamma2")) c.gamma2 = m.number("gamma2");
  if (m.has("sigma_lower")) c.sigma_lower = m.number("sigma_lower");
  validate_rule(c.gamma1 > 0.0 && c.gamma2 > 0.0 && c.sigma_lower > 0.0,
                "gamma1, gamma2 and sigma_lower must be positive");
  return model->with_constants(c);
}

}  // namespace conecraft
