#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "distbell/experiments.hpp"

namespace distbell {

namespace {

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed config JSON: ") + e.what());
  }
  try {
    return ExperimentConfig::from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
}

std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("DISTBELL_OUT"); env != nullptr && *env != '\0') return env;
  return "results";
}

void print_expectations(const ExperimentReport& report) {
  for (const auto& e : report.expectations) {
    std::cout << (e.pass ? "  [ok]   " : "  [FAIL] ") << e.name << "  (observed " << e.observed
              << ' ' << e.relation << ' ' << e.threshold << ")\n";
  }
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"distbell: distributional Bellman operators, Wasserstein metrics and the "
               "categorical learning rule on tabular MDPs"};
  app.require_subcommand(1);

  auto* list_cmd = app.add_subcommand("list", "List available experiments");

  std::string config_path;
  auto* validate_cmd = app.add_subcommand("validate", "Check an experiment config without running");
  validate_cmd->add_option("--config", config_path, "Config JSON file")->required();

  std::string run_config_path;
  std::string experiment;
  std::string out_dir;
  std::string mdp_file;
  std::uint64_t seed = 0;
  std::vector<int> atoms;
  int sweeps = 0;
  int rollouts = -1;
  double epsilon = -1.0;
  double step_size = 0.0;
  int n_seeds = 0;
  int jobs = 0;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment and write its report");
  run_cmd->add_option("--config", run_config_path, "Config JSON file (flags override its values)");
  run_cmd->add_option("--experiment", experiment, "Experiment name (see `list`)");
  run_cmd->add_option("--seed", seed, "Root seed");
  run_cmd->add_option("--out", out_dir, "Output directory (default $DISTBELL_OUT or ./results)");
  run_cmd->add_option("--atoms", atoms, "Comma-separated atom counts")->delimiter(',');
  run_cmd->add_option("--sweeps", sweeps,
                      "Supervised sweeps; the sampled regime uses 10x this count");
  run_cmd->add_option("--rollouts", rollouts, "Monte-Carlo rollouts per state-action");
  run_cmd->add_option("--epsilon", epsilon, "Reward offset for the two-state demos");
  run_cmd->add_option("--step-size", step_size, "Gradient descent step size");
  run_cmd->add_option("--seeds", n_seeds, "Seed repetitions for averaged experiments");
  run_cmd->add_option("--jobs", jobs, "Parallel cells for cliffwalk_atoms");
  run_cmd->add_option("--mdp", mdp_file, "Custom MDP JSON for fixed_point_check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (list_cmd->parsed()) {
      for (const auto& name : experiment_names()) std::cout << name << '\n';
      return 0;
    }

    if (validate_cmd->parsed()) {
      ExperimentConfig config = load_config_file(config_path);
      config.validate();
      std::cout << "config ok: experiment '" << config.experiment << "'\n";
      return 0;
    }

    // run
    ExperimentConfig config;
    config.out_dir = default_out_dir();
    if (!run_config_path.empty()) config = load_config_file(run_config_path);
    if (run_cmd->count("--experiment") > 0) config.experiment = experiment;
    if (run_cmd->count("--seed") > 0) config.seed = seed;
    if (run_cmd->count("--out") > 0) config.out_dir = out_dir;
    if (run_cmd->count("--atoms") > 0) config.atom_counts = atoms;
    if (run_cmd->count("--sweeps") > 0) {
      config.supervised_sweeps = sweeps;
      config.sampled_sweeps = 10 * sweeps;
    }
    if (run_cmd->count("--rollouts") > 0) config.rollouts = rollouts;
    if (run_cmd->count("--epsilon") > 0) config.epsilon = epsilon;
    if (run_cmd->count("--step-size") > 0) config.step_size = step_size;
    if (run_cmd->count("--seeds") > 0) config.n_seeds = n_seeds;
    if (run_cmd->count("--jobs") > 0) config.jobs = jobs;
    if (run_cmd->count("--mdp") > 0) config.mdp_file = mdp_file;
    if (config.experiment.empty())
      throw ConfigError("no experiment named; pass --experiment or a config file");
    config.validate();

    const ExperimentReport report = run_experiment(config);
    std::cout << report.experiment << ": " << (report.all_pass() ? "all expectations met"
                                                                 : "EXPECTATION FAILURES")
              << " (" << report.wall_seconds << " s)\n";
    print_expectations(report);
    std::cout << "report written to " << (config.out_dir / "report.json").string() << '\n';
    return report.all_pass() ? 0 : 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "run failed: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace distbell
