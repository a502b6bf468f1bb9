#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace distbell {

/// Configuration problems map to CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string experiment;
  std::uint64_t seed = 1;
  std::filesystem::path out_dir = "results";

  std::vector<int> atom_counts{2, 3, 5, 11, 21, 51};
  int supervised_sweeps = 5000;
  int sampled_sweeps = 50000;
  /// 0 picks the per-experiment default (1e4 rollouts for CliffWalk ground
  /// truth and fixed-point checks, 1e5 for the nonstationary demo).
  int rollouts = 0;
  int mc_horizon = 500;
  double epsilon = 0.1;
  /// Gradient step for the CliffWalk training cells. Large enough that
  /// per-sample Wasserstein descent visibly rails; cross-entropy training is
  /// insensitive to it over a wide range.
  double step_size = 0.3;
  int n_seeds = 3;
  int jobs = 1;
  /// Optional extra MDP (JSON file) folded into fixed_point_check.
  std::filesystem::path mdp_file;

  void validate() const;
  nlohmann::json to_json() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
};

struct Expectation {
  std::string name;
  bool pass = false;
  double observed = 0.0;
  double threshold = 0.0;
  std::string relation;  // e.g. "<=", ">=", "== within 1e-12"
};

struct ExperimentReport {
  std::string experiment;
  nlohmann::json config;
  nlohmann::json results;
  std::vector<Expectation> expectations;
  /// CSV artifacts by file name, written next to report.json.
  std::map<std::string, std::string> artifacts;
  /// Not part of the canonical report (reports are byte-identical per
  /// (config, seed)); persisted separately in run_meta.json.
  double wall_seconds = 0.0;

  bool all_pass() const;
  nlohmann::json to_json() const;
};

const std::vector<std::string>& experiment_names();

ExperimentReport run_noncontraction_demo(const ExperimentConfig& config);
ExperimentReport run_oscillation_demo(const ExperimentConfig& config);
ExperimentReport run_contraction_suite(const ExperimentConfig& config);
ExperimentReport run_nonstationary_demo(const ExperimentConfig& config);
ExperimentReport run_sample_wasserstein_demo(const ExperimentConfig& config);
ExperimentReport run_fixed_point_check(const ExperimentConfig& config);
ExperimentReport run_cliffwalk_atoms(const ExperimentConfig& config);

/// Dispatches on config.experiment, fills wall_seconds, and when persist is
/// set writes report.json, run_meta.json and all artifacts into out_dir.
ExperimentReport run_experiment(const ExperimentConfig& config, bool persist = true);

int cli_main(int argc, const char* const* argv);

}  // namespace distbell
