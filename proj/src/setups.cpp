#include "conecraft/setups.hpp"

#include <cmath>

#include "conecraft/errors.hpp"
#include "conecraft/io.hpp"

namespace conecraft {
namespace {

void rule(bool ok, const std::string& message) {
  if (!ok) fail(ErrorCode::Validate, message);
}

Vec point(const ConfigSection& s, const std::string& key, int dim) {
  rule(s.has(key), "missing required key '" + key + "'");
  const auto& v = s.vector(key);
  rule(static_cast<int>(v.size()) == dim, "'" + key + "' must have " + std::to_string(dim) + " entries");
  return to_vec(v);
}

void in_cone(const PolyhedralCone& cone, const Vec& x, const std::string& name) {
  rule(cone.contains(x, face_tolerance(x)), name + " must lie in G");
}

void positive_grid(const std::vector<double>& grid) {
  rule(!grid.empty(), "epsilon_grid must not be empty");
  for (double e : grid) rule(e > 0.0, "epsilon values must be positive for this kind");
}

}  // namespace

Vec to_vec(const std::vector<double>& values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) v[static_cast<Eigen::Index>(i)] = values[i];
  return v;
}

McOptions mc_options(const ExperimentConfig& config) {
  McOptions mc;
  mc.seed = config.seed;
  mc.threads = config.threads;
  if (config.params.has("batch")) mc.batch = config.params.integer("batch");
  return mc;
}

MinorizationSetup minorization_setup(const ExperimentConfig& config) {
  const ConfigSection& p = config.params;
  MinorizationSetup s;
  s.t1 = p.number("t1");
  s.t2 = p.optional_number("t2");
  s.M = p.number("M");
  s.M1 = p.number("M1");
  rule(p.has("x0"), "missing required key 'x0'");
  s.x0 = to_vec(p.vector("x0"));
  s.r0 = p.number("r0");
  s.r1 = p.number("r1");
  s.r2 = p.number("r2");
  s.target_radius = p.optional_number("target_radius");
  s.eps_grid = epsilon_grid(config);
  s.lattice_per_axis = static_cast<int>(p.integer("lattice"));
  s.bins_per_axis = static_cast<int>(p.integer("bins"));
  s.replicas = p.integer("replicas");
  s.dt = p.number("dt");
  s.kappa_min = p.optional_number("kappa_min");
  s.mc = mc_options(config);
  return s;
}

KilledFloorSetup killed_floor_setup(const ExperimentConfig& config, int dim) {
  const ConfigSection& p = config.params;
  KilledFloorSetup s;
  s.center = p.has("center") ? point(p, "center", dim) : Vec::Zero(dim);
  s.radius = p.number("radius");
  s.gamma = p.number("gamma");
  s.t = p.number("t");
  s.eps_grid = epsilon_grid(config);
  s.lattice_per_axis = static_cast<int>(p.integer("lattice"));
  s.bins_per_axis = static_cast<int>(p.integer("bins"));
  s.replicas = p.integer("replicas");
  s.dt = p.number("dt");
  s.kappa_min = p.optional_number("kappa_min");
  s.mc = mc_options(config);
  return s;
}

LevelingSetup exit_setup(const ExperimentConfig& config) {
  const ConfigSection& p = config.params;
  const int dim = build_cone(config).dim();
  LevelingSetup s;
  s.domain = Domain::ball(p.number("domain_radius"));
  s.x = point(p, "x", dim);
  s.y = point(p, "y", dim);
  s.eps_grid = epsilon_grid(config);
  s.replicas = static_cast<std::size_t>(p.number("replicas"));
  s.dt = p.number("dt");
  s.horizon = p.number("horizon");
  s.max_doublings = static_cast<int>(p.integer("max_doublings"));
  s.b0_gamma = p.number("b0_gamma");
  s.flow_t_max = p.number("flow_t_max");
  s.flow_dt = p.number("flow_dt");
  s.mc = mc_options(config);
  s.bound = config.kind == "psi_gap" ? time_functional_bound(config) : boundary_functional_bound(config);
  return s;
}

std::function<double(const Vec&)> boundary_functional(const ExperimentConfig& config, int dim) {
  const ConfigSection& p = config.params;
  const std::string& kind = p.text("f");
  if (kind == "constant") {
    const double c = p.number("f_value");
    return [c](const Vec&) { return c; };
  }
  rule(kind == "indicator", "f must be indicator or constant");
  Vec a;
  if (p.has("f_normal")) {
    a = point(p, "f_normal", dim);
  } else {
    a = Vec::Zero(dim);
    a[0] = 1.0;
    if (dim > 1) a[1] = -1.0;
  }
  const double c = p.number("f_offset");
  return [a, c](const Vec& z) { return a.dot(z) > c ? 1.0 : 0.0; };
}

double boundary_functional_bound(const ExperimentConfig& config) {
  if (config.params.text("f") == "constant") return std::max(1e-300, std::abs(config.params.number("f_value")));
  return 1.0;
}

std::function<double(double)> time_functional(const ExperimentConfig& config) {
  const ConfigSection& p = config.params;
  const std::string& kind = p.text("psi");
  if (kind == "constant") {
    const double c = p.number("psi_value");
    return [c](double) { return c; };
  }
  rule(kind == "log_envelope", "psi must be log_envelope or constant");
  const double q = p.number("psi_q");
  return [q](double t) { return log_envelope(t, q); };
}

double time_functional_bound(const ExperimentConfig& config) {
  const ConfigSection& p = config.params;
  if (p.has("psi_bound")) return p.number("psi_bound");
  const double final_horizon = p.number("horizon") * std::ldexp(1.0, static_cast<int>(p.integer("max_doublings")));
  if (p.text("psi") == "constant") return std::max(1e-300, std::abs(p.number("psi_value")));
  return log_envelope(final_horizon, p.number("psi_q"));
}

PiecewisePath sp_input_path(const ExperimentConfig& config) {
  const ConfigSection& p = config.params;
  if (p.has("path_csv")) {
    rule(!p.has("times") && !p.has("values"), "give either path_csv or times/values, not both");
    return read_path_csv(read_text_file(p.text("path_csv")));
  }
  rule(p.has("times") && p.has("values"), "sp_solve needs times and values (or path_csv)");
  PiecewisePath path;
  path.times = p.vector("times");
  for (const auto& row : p.matrix("values")) path.values.push_back(to_vec(row));
  rule(path.times.size() == path.values.size(), "times and values must have the same length");
  path.check();
  return path;
}

void validate_kind(const ExperimentConfig& config, const PolyhedralCone& cone, const DiffusionModel& model) {
  const ConfigSection& p = config.params;
  const int dim = cone.dim();
  const std::string& kind = config.kind;
  if (kind == "validate") {
    rule(p.integer("model_pairs") >= 1, "model_pairs must be at least 1");
    rule(p.integer("stability_points") >= 1, "stability_points must be at least 1");
    rule(p.number("delta") >= 0.0, "delta must be nonnegative");
  } else if (kind == "sp_solve") {
    const PiecewisePath path = sp_input_path(config);
    rule(path.dim() == dim, "path dimension must match the cone");
    in_cone(cone, path.values.front(), "psi(0)");
    rule(p.number("refine") > 0.0, "refine must be positive");
    rule(p.integer("breakpoints") >= 1, "breakpoints must be at least 1");
  } else if (kind == "simulate" || kind == "flow") {
    in_cone(cone, point(p, "x0", dim), "x0");
    rule(p.number("dt") > 0.0 && p.number("dt") <= p.number("horizon"), "need 0 < dt <= horizon");
    if (kind == "simulate") {
      rule(p.integer("replicas") >= 1, "replicas must be at least 1");
      if (p.flag("scaled")) rule(model.epsilon() > 0.0, "scaled simulation needs epsilon > 0");
    }
    if (kind == "flow" && p.has("domain_radius")) {
      rule(p.number("domain_radius") > 0.0, "domain_radius must be positive");
      rule(point(p, "x0", dim).norm() < p.number("domain_radius"), "x0 must lie in B");
      rule(p.number("t_max") >= p.number("dt"), "need dt <= t_max");
    }
  } else if (kind == "minorization") {
    const MinorizationSetup s = minorization_setup(config);
    positive_grid(s.eps_grid);
    rule(s.x0.size() == dim, "x0 must have the cone dimension");
    check_minorization_geometry(cone, s);
    rule(s.replicas >= 1, "replicas must be at least 1");
    rule(s.lattice_per_axis >= 1 && s.bins_per_axis >= 1, "lattice and bins must be at least 1");
    rule(s.dt > 0.0 && s.dt < s.t1, "need 0 < dt < t1");
  } else if (kind == "killed_floor") {
    const KilledFloorSetup s = killed_floor_setup(config, dim);
    positive_grid(s.eps_grid);
    rule(s.radius > 0.0, "radius must be positive");
    rule(s.gamma > 0.0 && s.gamma < 1.0, "gamma must lie in (0, 1)");
    rule(s.t > 0.0 && s.dt > 0.0 && s.dt <= s.t, "need 0 < dt <= t");
    rule(s.replicas >= 1, "replicas must be at least 1");
  } else if (kind == "leveling" || kind == "psi_gap") {
    const LevelingSetup s = exit_setup(config);
    positive_grid(s.eps_grid);
    in_cone(cone, s.x, "x");
    in_cone(cone, s.y, "y");
    rule(s.domain.contains(s.x) && s.domain.contains(s.y), "x and y must lie in B");
    rule(s.replicas >= 1, "replicas must be at least 1");
    rule(s.dt > 0.0 && s.dt <= s.horizon, "need 0 < dt <= horizon");
    if (kind == "leveling") {
      boundary_functional(config, dim);
    } else {
      time_functional(config);
      if (p.text("psi") == "log_envelope") {
        const double q = p.number("psi_q");
        rule(q > 0.0 && q < 1.0, "psi_q must lie in (0, 1)");
      }
      rule(p.number("psi_m") >= 1.0, "psi_m must be at least 1");
      rule(p.number("probe_horizon") > 10.0, "probe_horizon must exceed 10");
    }
  } else if (kind == "scaling_check") {
    positive_grid(epsilon_grid(config));
    in_cone(cone, point(p, "xbar", dim), "xbar");
    rule(!p.vector("dt_grid").empty(), "dt_grid must not be empty");
    for (double dt : p.vector("dt_grid"))
      rule(dt > 0.0 && dt <= p.number("horizon"), "need 0 < dt <= horizon for every dt_grid entry");
    rule(p.integer("paths") >= 1, "paths must be at least 1");
    rule(p.number("factor") > 0.0, "factor must be positive");
  }
}

}  // namespace conecraft
