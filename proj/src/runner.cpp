#include "conecraft/runner.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <functional>
#include <iomanip>
#include <sstream>

#include "conecraft/density.hpp"
#include "conecraft/errors.hpp"
#include "conecraft/geometry.hpp"
#include "conecraft/io.hpp"
#include "conecraft/leveling.hpp"
#include "conecraft/parallel.hpp"
#include "conecraft/setups.hpp"
#include "conecraft/simulate.hpp"
#include "conecraft/skorokhod.hpp"

namespace conecraft {
namespace {

constexpr std::uint64_t kSimulateTag = 0x53494Dull;       // "SIM"
constexpr std::uint64_t kScalingTag = 0x5343414Cull;      // "SCAL"
constexpr std::uint64_t kDriftSampleTag = 0x44524946ull;  // "DRIF"

using Clock = std::chrono::steady_clock;

class Run {
 public:
  Run(ExperimentConfig config, std::filesystem::path out)
      : config_(std::move(config)), out_(std::move(out)), cone_(build_cone(config_)),
        model_(build_model(config_)) {}

  // Runs the named stage and records its duration.
  template <class Fn>
  auto stage(const std::string& name, Fn&& fn) {
    const auto start = Clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      stages_.push_back({{"name", name}, {"seconds", seconds_since(start)}});
    } else {
      auto result = fn();
      stages_.push_back({{"name", name}, {"seconds", seconds_since(start)}});
      return result;
    }
  }

  void emit(const std::string& name, const std::string& content) {
    write_text_file(out_ / name, content);
    files_.push_back(name);
  }
  void emit_json(const std::string& name, const nlohmann::json& j) { emit(name, j.dump(2) + "\n"); }
  void emit_binary(const std::string& name, const std::vector<Vec>& increments) {
    write_increments(out_ / name, cone_.dim(), increments);
    files_.push_back(name);
  }

  std::string dispatch();

  nlohmann::json stages() const { return stages_; }
  const std::vector<std::string>& files() const { return files_; }

 private:
  static double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
  }

  std::string run_validate();
  std::string run_sp_solve();
  std::string run_simulate();
  std::string run_flow();
  std::string run_minorization();
  std::string run_killed_floor();
  std::string run_exit_gap();
  std::string run_scaling_check();

  ExperimentConfig config_;
  std::filesystem::path out_;
  PolyhedralCone cone_;
  DiffusionModel model_;
  nlohmann::json stages_ = nlohmann::json::array();
  std::vector<std::string> files_;
};

std::string Run::dispatch() {
  const std::string& kind = config_.kind;
  if (kind == "validate") return run_validate();
  if (kind == "sp_solve") return run_sp_solve();
  if (kind == "simulate") return run_simulate();
  if (kind == "flow") return run_flow();
  if (kind == "minorization") return run_minorization();
  if (kind == "killed_floor") return run_killed_floor();
  if (kind == "leveling" || kind == "psi_gap") return run_exit_gap();
  if (kind == "scaling_check") return run_scaling_check();
  fail(ErrorCode::Validate, "unknown kind '" + kind + "'");
}

std::string Run::run_validate() {
  const ConfigSection& p = config_.params;
  nlohmann::json report;
  bool ok = true;
  stage("cone", [&] {
    const ValidationReport v = validate_cone(cone_, config_.seed);
    ok = ok && v.ok();
    report["cone"] = to_json(v);
    const ReflectionMatrix r = reflection_matrix(cone_);
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < r.m.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(r.m.cols()));
      for (Eigen::Index j = 0; j < r.m.cols(); ++j) row[static_cast<std::size_t>(j)] = r.m(i, j);
      rows.push_back(row);
    }
    report["reflection_matrix"] = {{"m", rows},
                                   {"completely_s", r.completely_s ? nlohmann::json(*r.completely_s) : nullptr},
                                   {"warnings", r.warnings}};
  });
  stage("stability", [&] {
    try {
      const StabilityCone sc(cone_);
      nlohmann::json facets = nlohmann::json::array();
      for (const Vec& f : sc.facet_normals()) facets.push_back(to_json(f));
      std::vector<Vec> points;
      const Projector projector(cone_);
      FaceVec alpha(cone_.num_faces());
      for (std::uint64_t j = 0; j < p.integer("stability_points"); ++j) {
        RngStream rng = seed_stream(config_.seed, stream_id({kDriftSampleTag, j}));
        Vec x(cone_.dim());
        rng.fill_normal(x, 1.0);
        projector.project_in_place(x, alpha);
        points.push_back(x);
      }
      const DriftStability ds = check_drift_stability(cone_, model_, points, p.number("delta"));
      report["stability_cone"] = {{"degenerate", sc.degenerate()}, {"facet_normals", facets}};
      report["drift_stability"] = {{"holds", ds.holds},
                                   {"delta", p.number("delta")},
                                   {"worst_point", to_json(ds.worst_point)},
                                   {"worst_margin", ds.worst_margin},
                                   {"degenerate", ds.degenerate}};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DimensionLimit) throw;
      report["stability_cone"] = {{"skipped", e.what()}};
    }
  });
  stage("model", [&] {
    const ModelValidation mv = validate_model(cone_, model_, p.integer("model_pairs"), config_.seed);
    ok = ok && mv.ok();
    nlohmann::json checks = nlohmann::json::array();
    for (const auto& c : mv.checks)
      checks.push_back({{"name", c.name}, {"passed", c.passed}, {"margin", c.margin}, {"detail", c.detail}});
    report["model"] = {{"name", model_.name()}, {"ok", mv.ok()}, {"checks", checks}};
  });
  report["ok"] = ok;
  emit_json("validation.json", report);
  return ok ? "PASS" : "FAIL";
}

std::string Run::run_sp_solve() {
  const ConfigSection& p = config_.params;
  const PiecewisePath psi = sp_input_path(config_);
  const Projector projector(cone_);
  const ReflectedPath path = stage("solve", [&] { return solve_sp(projector, psi, p.number("refine")); });
  emit("sp_path.csv", reflected_path_csv(path));
  emit_json("sp_summary.json", {{"steps", path.times.size() - 1},
                                {"phi_end", to_json(path.phi.back())},
                                {"eta_end", to_json(path.eta.back())},
                                {"total_variation", path.total_variation.back()},
                                {"max_complementarity", path.max_complementarity}});
  if (p.integer("lipschitz_pairs") > 0) {
    const LipschitzProbeResult probe = stage("lipschitz", [&] {
      return lipschitz_probe(cone_,
                             random_walk_pairs(cone_, static_cast<int>(p.integer("breakpoints")),
                                               p.number("perturbation")),
                             p.integer("lipschitz_pairs"), config_.seed, p.number("refine"));
    });
    emit_json("lipschitz.json", {{"max_ratio", probe.max_ratio},
                                 {"evaluated", probe.evaluated},
                                 {"skipped", probe.skipped},
                                 {"median", probe.evaluated ? probe.quantile(0.5) : 0.0},
                                 {"q90", probe.evaluated ? probe.quantile(0.9) : 0.0},
                                 {"q99", probe.evaluated ? probe.quantile(0.99) : 0.0},
                                 {"histogram", probe.histogram(20)}});
  }
  return "COMPLETE";
}

std::string Run::run_simulate() {
  const ConfigSection& p = config_.params;
  const Vec x0 = to_vec(p.vector("x0"));
  const bool scaled = p.flag("scaled");
  const EulerStepper stepper(Projector(cone_), scaled ? model_.rescaled() : model_);
  const std::size_t replicas = p.integer("replicas");
  const std::size_t dumps = std::min<std::size_t>(replicas, p.integer("dump_paths"));
  const int k = cone_.dim();

  std::vector<SimPath> kept(dumps);
  std::vector<Vec> terminal(replicas);
  std::vector<double> residual(replicas), min_face(replicas);
  stage("simulate", [&] {
    parallel_for(replicas, resolve_threads(config_.threads), [&](std::size_t r) {
      RngStream rng = seed_stream(config_.seed, stream_id({kSimulateTag, r}));
      SimPath path = simulate_path(stepper, x0, p.number("horizon"), p.number("dt"), rng);
      terminal[r] = path.z.back();
      residual[r] = path.decomposition_residual(cone_);
      double low = std::numeric_limits<double>::infinity();
      for (const Vec& z : path.z) low = std::min(low, cone_.min_face_value(z));
      min_face[r] = low;
      if (r < dumps) kept[r] = std::move(path);
    });
  });

  std::vector<std::string> header{"replica"};
  for (int i = 1; i <= k; ++i) header.push_back("Z" + std::to_string(i));
  header.push_back("decomposition_residual");
  CsvWriter csv(header);
  Vec mean = Vec::Zero(k);
  double worst_residual = 0.0, worst_face = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < replicas; ++r) {
    csv.field(r);
    for (int i = 0; i < k; ++i) csv.field(terminal[r][i]);
    csv.field(residual[r]);
    csv.end_row();
    mean += terminal[r] / static_cast<double>(replicas);
    worst_residual = std::max(worst_residual, residual[r]);
    worst_face = std::min(worst_face, min_face[r]);
  }
  emit("terminal.csv", csv.str());
  for (std::size_t r = 0; r < dumps; ++r) {
    emit("path_" + std::to_string(r) + ".csv", path_csv(kept[r], cone_.num_faces()));
    if (p.flag("save_increments")) emit_binary("increments_" + std::to_string(r) + ".bin", kept[r].increments);
  }
  emit_json("simulate.json", {{"replicas", replicas},
                              {"scaled", scaled},
                              {"epsilon", model_.epsilon()},
                              {"terminal_mean", to_json(mean)},
                              {"max_decomposition_residual", worst_residual},
                              {"min_face_value", worst_face}});
  return "COMPLETE";
}

std::string Run::run_flow() {
  const ConfigSection& p = config_.params;
  const Vec x0 = to_vec(p.vector("x0"));
  const SimPath path = stage("flow", [&] { return flow_ode(cone_, model_, x0, p.number("horizon"), p.number("dt")); });
  emit("flow.csv", path_csv(path, cone_.num_faces()));
  nlohmann::json summary = {{"end", to_json(path.z.back())}, {"steps", path.times.size() - 1}};
  if (p.has("domain_radius")) {
    const StartClassification c = stage("classify", [&] {
      return classify_start(cone_, model_, Domain::ball(p.number("domain_radius")), x0, p.number("gamma"),
                            p.number("t_max"), p.number("dt"));
    });
    summary["classification"] = {{"status", to_string(c.status)},
                                 {"in_b_gamma", c.in_b_gamma},
                                 {"min_distance", c.min_distance},
                                 {"stop_time", c.stop_time}};
    emit_json("flow.json", summary);
    return c.status == StartClassification::Status::Horizon ? "INCONCLUSIVE" : "COMPLETE";
  }
  emit_json("flow.json", summary);
  return "COMPLETE";
}

std::string Run::run_minorization() {
  const MinorizationSetup setup = minorization_setup(config_);
  const FloorReport report = stage("minorization", [&] { return minorization_check(cone_, model_, setup); });
  emit_json("floor.json", to_json(report));
  emit("floor.csv", floor_csv(report));
  if (config_.params.flag("compose")) {
    // Stage two: killed diffusion in B_r2(x0) from and to B_r1(x0) over t3.
    KilledFloorSetup killed;
    killed.center = setup.x0;
    killed.radius = setup.r2;
    killed.gamma = setup.r1 / setup.r2;
    killed.t = setup.t1 - setup.t2.value_or(0.5 * setup.t1);
    killed.eps_grid = setup.eps_grid;
    killed.bins_per_axis = setup.bins_per_axis;
    killed.replicas = setup.replicas;
    killed.dt = setup.dt;
    killed.mc = setup.mc;
    const FloorReport stage2 = stage("stage_two", [&] { return killed_kernel_floor(model_, killed); });
    emit_json("stage_two.json", to_json(stage2));
    emit("stage_two.csv", floor_csv(stage2));
    nlohmann::json composed = nlohmann::json::array();
    for (std::size_t e = 0; e < setup.eps_grid.size(); ++e) {
      const StageEstimate s1 = stage_one(report, e);
      const StageEstimate s2 = stage_two(stage2, e);
      const ComposedFloor c = chapman_floor_compose(s1, s2);
      composed.push_back({{"epsilon", setup.eps_grid[e]},
                          {"kappa0", s1.value},
                          {"kappa0_lcb99", s1.lcb99},
                          {"kappa1", s2.value},
                          {"kappa1_lcb99", s2.lcb99},
                          {"kappa", c.value},
                          {"kappa_lcb99", c.lcb99},
                          {"direct_floor", report.per_epsilon[e].floor},
                          {"verdict", to_string(c.verdict)}});
    }
    emit_json("compose.json", composed);
  }
  return to_string(report.verdict);
}

std::string Run::run_killed_floor() {
  const KilledFloorSetup setup = killed_floor_setup(config_, cone_.dim());
  const FloorReport report = stage("killed_floor", [&] { return killed_kernel_floor(model_, setup); });
  emit_json("floor.json", to_json(report));
  emit("floor.csv", floor_csv(report));
  return to_string(report.verdict);
}

std::string Run::run_exit_gap() {
  const LevelingSetup setup = exit_setup(config_);
  GapCurve curve;
  nlohmann::json extra = nlohmann::json::object();
  if (config_.kind == "leveling") {
    const auto f = boundary_functional(config_, cone_.dim());
    curve = stage("leveling", [&] { return leveling_gap(cone_, model_, setup, f); });
  } else {
    const ConfigSection& p = config_.params;
    const auto psi = time_functional(config_);
    const PsiClassResult member = stage("psi_class", [&] {
      return psi_class_check(psi, p.number("psi_q"), p.number("psi_m"), p.number("probe_horizon"));
    });
    extra = {{"member", member.member},
             {"witness", member.witness},
             {"envelope_sup", member.envelope_sup},
             {"increment_sup", member.increment_sup},
             {"detail", member.detail}};
    require(member.member, ErrorCode::Precondition,
            "psi failed the class check at t = " + format_double(member.witness) + ": " + member.detail);
    curve = stage("psi_gap", [&] { return psi_gap(cone_, model_, setup, psi); });
  }
  nlohmann::json summary = to_json(curve);
  if (!extra.empty()) summary["psi_class"] = extra;
  emit("gap.csv", gap_csv(curve));
  emit_json("gap.json", summary);
  if (curve.censoring) return "CENSORING";
  return to_string(curve.verdict);
}

std::string Run::run_scaling_check() {
  const ConfigSection& p = config_.params;
  const Vec xbar = to_vec(p.vector("xbar"));
  const std::vector<double> grid = epsilon_grid(config_);
  const std::vector<double>& dts = p.vector("dt_grid");
  const std::size_t paths = p.integer("paths");
  struct Cell {
    std::size_t e, d;
  };
  std::vector<Cell> cells;
  for (std::size_t e = 0; e < grid.size(); ++e)
    for (std::size_t d = 0; d < dts.size(); ++d) cells.push_back({e, d});
  std::vector<double> gaps(cells.size() * paths);
  stage("coupled", [&] {
    parallel_for(gaps.size(), resolve_threads(config_.threads), [&](std::size_t u) {
      const Cell& c = cells[u / paths];
      const std::size_t path = u % paths;
      RngStream rng = seed_stream(config_.seed, stream_id({kScalingTag, c.e, c.d, path}));
      gaps[u] = coupled_scaling_gap(cone_, model_.with_epsilon(grid[c.e]), xbar, p.number("horizon"), dts[c.d], rng)
                    .sup_gap;
    });
  });
  CsvWriter csv({"epsilon", "dt", "path", "sup_gap"});
  nlohmann::json cells_json = nlohmann::json::array();
  bool pass = true;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    double worst = 0.0;
    for (std::size_t path = 0; path < paths; ++path) {
      const double g = gaps[i * paths + path];
      csv.field(grid[cells[i].e]).field(dts[cells[i].d]).field(path).field(g);
      csv.end_row();
      worst = std::max(worst, g);
    }
    const double bound = p.number("factor") * std::sqrt(dts[cells[i].d]);
    pass = pass && worst <= bound;
    cells_json.push_back({{"epsilon", grid[cells[i].e]},
                          {"dt", dts[cells[i].d]},
                          {"max_sup_gap", worst},
                          {"bound", bound},
                          {"pass", worst <= bound}});
  }
  emit("scaling.csv", csv.str());
  emit_json("scaling.json", {{"cells", cells_json}, {"verdict", pass ? "PASS" : "FAIL"}});
  return pass ? "PASS" : "FAIL";
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace

int exit_status_for(const std::string& status) {
  if (status == "COMPLETE" || status == "PASS") return 0;
  if (status == "INCONCLUSIVE" || status == "CENSORING") return 2;
  return 1;
}

RunResult run(ExperimentConfig config, const RunOptions& options) {
  if (options.seed) config.seed = *options.seed;
  if (options.threads) config.threads = *options.threads;
  const std::filesystem::path out = options.out_dir.value_or(std::filesystem::path(config.output));
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  require(!ec && std::filesystem::is_directory(out), ErrorCode::Io,
          "cannot create output directory " + out.string());

  const std::string started = utc_timestamp();
  const auto start = Clock::now();
  Run job(config, out);
  const std::string status = job.dispatch();
  const double wall = std::chrono::duration<double>(Clock::now() - start).count();

  nlohmann::json files = nlohmann::json::array();
  for (const auto& name : job.files()) {
    const std::filesystem::path file = out / name;
    files.push_back({{"name", name},
                     {"bytes", std::filesystem::file_size(file)},
                     {"sha256", sha256_file(file)}});
  }
  RunResult result;
  result.status = status;
  result.exit_status = exit_status_for(status);
  result.out_dir = out;
  result.manifest = {{"config", config.echo()},
                     {"version", kVersion},
                     {"started_at", started},
                     {"wall_clock_seconds", wall},
                     {"stages", job.stages()},
                     {"files", files},
                     {"status", status},
                     {"exit_status", result.exit_status}};
  write_text_file(out / "manifest.json", result.manifest.dump(2) + "\n");
  return result;
}

}  // namespace conecraft
