// conecraft: batch runner for reflected-diffusion experiments.
//
//   conecraft run <config> [--out DIR] [--threads N] [--seed S]
//   conecraft validate <config>
//   conecraft oracle sp1d <path-csv>

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "conecraft/config.hpp"
#include "conecraft/errors.hpp"
#include "conecraft/io.hpp"
#include "conecraft/runner.hpp"
#include "conecraft/skorokhod.hpp"

namespace {

using namespace conecraft;

int report_error(const Error& e) {
  std::cerr << "error: " << e.what() << "\n";
  return 1;
}

int cmd_run(const std::string& path, const std::string& out, int threads, const std::string& seed) {
  ExperimentConfig config = parse_config(read_text_file(path));
  RunOptions options;
  if (!out.empty()) options.out_dir = out;
  if (threads >= 0) options.threads = static_cast<unsigned>(threads);
  if (!seed.empty()) {
    std::size_t used = 0;
    const unsigned long long s = std::stoull(seed, &used);
    require(used == seed.size(), ErrorCode::Parse, "--seed must be an unsigned integer");
    options.seed = s;
  }
  const RunResult result = run(std::move(config), options);
  std::cout << result.status << " " << result.out_dir.string() << "\n";
  return result.exit_status;
}

int cmd_validate(const std::string& path) {
  const ExperimentConfig config = parse_config(read_text_file(path));
  std::cout << "OK\n" << config.echo().dump(2) << "\n";
  return 0;
}

int cmd_oracle_sp1d(const std::string& path) {
  const PiecewisePath psi = read_path_csv(read_text_file(path));
  std::vector<double> values;
  for (const Vec& v : psi.values) values.push_back(v[0]);
  const std::vector<double> phi = reflect_1d_explicit(values);
  CsvWriter csv({"t", "psi", "phi", "eta"});
  for (std::size_t i = 0; i < values.size(); ++i) {
    csv.field(psi.times[i]).field(values[i]).field(phi[i]).field(phi[i] - values[i]);
    csv.end_row();
  }
  std::cout << csv.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and verification harness for reflected diffusions in polyhedral cones"};
  app.require_subcommand(1);

  std::string run_config, out_dir, seed;
  int threads = -1;
  auto* run_cmd = app.add_subcommand("run", "run an experiment configuration");
  run_cmd->add_option("config", run_config, "configuration file")->required();
  run_cmd->add_option("--out", out_dir, "output directory (overrides the config)");
  run_cmd->add_option("--threads", threads, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
  run_cmd->add_option("--seed", seed, "master seed (overrides the config)");

  std::string validate_config;
  auto* validate_cmd = app.add_subcommand("validate", "parse and validate a configuration");
  validate_cmd->add_option("config", validate_config, "configuration file")->required();

  std::string oracle_name, oracle_path;
  auto* oracle_cmd = app.add_subcommand("oracle", "reference computations for cross-checks");
  oracle_cmd->add_option("name", oracle_name, "oracle name (sp1d)")->required()->check(CLI::IsMember({"sp1d"}));
  oracle_cmd->add_option("path", oracle_path, "input CSV with columns t,value")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run_config, out_dir, threads, seed);
    if (*validate_cmd) return cmd_validate(validate_config);
    if (*oracle_cmd) return cmd_oracle_sp1d(oracle_path);
  } catch (const Error& e) {
    return report_error(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
