#include "distbell/experiments.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <sstream>
#include <thread>

#include "distbell/bellman.hpp"
#include "distbell/environments.hpp"
#include "distbell/json_io.hpp"
#include "distbell/learn.hpp"
#include "distbell/metrics.hpp"
#include "distbell/monte_carlo.hpp"
#include "distbell/numeric.hpp"

namespace distbell {

using nlohmann::json;

void ExperimentConfig::validate() const {
  const auto& names = experiment_names();
  if (std::find(names.begin(), names.end(), experiment) == names.end())
    throw ConfigError("unknown experiment '" + experiment + "'");
  if (atom_counts.empty()) throw ConfigError("atom_counts must be nonempty");
  for (int n : atom_counts) {
    if (n < 2) throw ConfigError("atom counts must be >= 2 (categorical support needs two atoms)");
  }
  if (supervised_sweeps < 1 || sampled_sweeps < 1) throw ConfigError("sweeps must be >= 1");
  if (rollouts < 0) throw ConfigError("rollouts must be >= 0 (0 = experiment default)");
  if (mc_horizon < 1) throw ConfigError("mc_horizon must be >= 1");
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
  if (!(step_size > 0.0)) throw ConfigError("step_size must be > 0");
  if (n_seeds < 1) throw ConfigError("n_seeds must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
}

json ExperimentConfig::to_json() const {
  return json{{"experiment", experiment},
              {"seed", seed},
              {"out_dir", out_dir.string()},
              {"atom_counts", atom_counts},
              {"supervised_sweeps", supervised_sweeps},
              {"sampled_sweeps", sampled_sweeps},
              {"rollouts", rollouts},
              {"mc_horizon", mc_horizon},
              {"epsilon", epsilon},
              {"step_size", step_size},
              {"n_seeds", n_seeds},
              {"jobs", jobs},
              {"mdp_file", mdp_file.string()}};
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig config;
  const auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("experiment", config.experiment);
  get("seed", config.seed);
  get("atom_counts", config.atom_counts);
  get("supervised_sweeps", config.supervised_sweeps);
  get("sampled_sweeps", config.sampled_sweeps);
  get("rollouts", config.rollouts);
  get("mc_horizon", config.mc_horizon);
  get("epsilon", config.epsilon);
  get("step_size", config.step_size);
  get("n_seeds", config.n_seeds);
  get("jobs", config.jobs);
  if (j.contains("out_dir")) config.out_dir = j.at("out_dir").get<std::string>();
  if (j.contains("mdp_file")) config.mdp_file = j.at("mdp_file").get<std::string>();
  return config;
}

bool ExperimentReport::all_pass() const {
  for (const auto& e : expectations) {
    if (!e.pass) return false;
  }
  return true;
}

json ExperimentReport::to_json() const {
  json exp = json::array();
  for (const auto& e : expectations) {
    exp.push_back(json{{"name", e.name},
                       {"pass", e.pass},
                       {"observed", e.observed},
                       {"threshold", e.threshold},
                       {"relation", e.relation}});
  }
  json artifact_names = json::array();
  for (const auto& [name, content] : artifacts) {
    (void)content;
    artifact_names.push_back(name);
  }
  return json{{"experiment", experiment},
              {"config", config},
              {"results", results},
              {"expectations", exp},
              {"artifacts", artifact_names}};
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names{
      "cliffwalk_atoms",      "contraction_suite",       "noncontraction_demo",
      "oscillation_demo",     "nonstationary_demo",      "sample_wasserstein_demo",
      "fixed_point_check"};
  return names;
}

namespace {

Expectation expect_le(std::string name, double observed, double threshold) {
  return {std::move(name), observed <= threshold, observed, threshold, "<="};
}

Expectation expect_ge(std::string name, double observed, double threshold) {
  return {std::move(name), observed >= threshold, observed, threshold, ">="};
}

Expectation expect_gt(std::string name, double observed, double threshold) {
  return {std::move(name), observed > threshold, observed, threshold, ">"};
}

Expectation expect_close(std::string name, double observed, double target, double tol) {
  std::ostringstream rel;
  rel << "within " << tol << " of";
  return {std::move(name), std::abs(observed - target) <= tol, observed, target, rel.str()};
}

Expectation expect_true(std::string name, bool value) {
  return {std::move(name), value, value ? 1.0 : 0.0, 1.0, "=="};
}

void parallel_for(int jobs, int n, const std::function<void(int)>& body) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> workers;
  const int count = std::min(jobs, n);
  workers.reserve(static_cast<std::size_t>(count));
  for (int w = 0; w < count; ++w) {
    workers.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
  }
  for (auto& t : workers) t.join();
}

std::uint64_t cell_seed(std::uint64_t root, const std::string& name) {
  std::uint64_t s = root ^ fnv1a64(name);
  return splitmix64(s);
}

// ---------------------------------------------------------------------------
// Randomized instance battery
// ---------------------------------------------------------------------------

DiscreteDistribution battery_distribution(Rng& rng, int max_atoms, double lo, double hi) {
  const int n = 1 + rng.uniform_int(max_atoms);
  std::vector<double> atoms(static_cast<std::size_t>(n));
  std::vector<double> probs(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    atoms[static_cast<std::size_t>(i)] = rng.uniform(lo, hi);
    probs[static_cast<std::size_t>(i)] = rng.uniform(0.05, 1.0);
  }
  return make_discrete(std::move(atoms), std::move(probs));
}

TabularMdp battery_mdp(Rng& rng, int max_states, int max_actions, double gamma) {
  const int n_states = 2 + rng.uniform_int(max_states - 1);
  const int n_actions = 1 + rng.uniform_int(max_actions);
  std::vector<std::vector<double>> transition;
  std::vector<DiscreteDistribution> reward;
  for (int k = 0; k < n_states * n_actions; ++k) {
    std::vector<double> row(static_cast<std::size_t>(n_states));
    double sum = 0.0;
    for (double& p : row) {
      const double u = rng.uniform();
      p = u * u;
      sum += p;
    }
    for (double& p : row) p /= sum;
    transition.push_back(std::move(row));
    reward.push_back(battery_distribution(rng, 3, -2.0, 2.0));
  }
  return TabularMdp(n_states, n_actions, gamma, std::move(transition), std::move(reward),
                    std::vector<bool>(static_cast<std::size_t>(n_states), false));
}

TabularMdp battery_point_reward_mdp(Rng& rng, int max_states, int max_actions, double gamma) {
  const int n_states = 2 + rng.uniform_int(max_states - 1);
  const int n_actions = 1 + rng.uniform_int(max_actions);
  std::vector<std::vector<double>> transition;
  std::vector<DiscreteDistribution> reward;
  for (int k = 0; k < n_states * n_actions; ++k) {
    std::vector<double> row(static_cast<std::size_t>(n_states), 0.0);
    row[static_cast<std::size_t>(rng.uniform_int(n_states))] = 1.0;
    transition.push_back(std::move(row));
    reward.push_back(DiscreteDistribution::point_mass(rng.uniform(-2.0, 2.0)));
  }
  return TabularMdp(n_states, n_actions, gamma, std::move(transition), std::move(reward),
                    std::vector<bool>(static_cast<std::size_t>(n_states), false));
}

PolicyTable battery_policy(Rng& rng, int n_states, int n_actions) {
  std::vector<std::vector<double>> rows;
  for (int x = 0; x < n_states; ++x) {
    std::vector<double> row(static_cast<std::size_t>(n_actions));
    double sum = 0.0;
    for (double& p : row) {
      p = 0.05 + rng.uniform();
      sum += p;
    }
    for (double& p : row) p /= sum;
    rows.push_back(std::move(row));
  }
  return PolicyTable(n_states, n_actions, std::move(rows));
}

ValueDistributionTable battery_table(Rng& rng, int n_states, int n_actions, double bound) {
  ValueDistributionTable table(n_states, n_actions, bound);
  for (int x = 0; x < n_states; ++x)
    for (int a = 0; a < n_actions; ++a)
      table.set(x, a, battery_distribution(rng, 5, -bound, bound));
  return table;
}

ValueDistributionTable battery_table_with_means(Rng& rng, const ValueDistributionTable& ref) {
  ValueDistributionTable table(ref.n_states(), ref.n_actions(), 3.0 * ref.bound() + 1.0);
  for (int x = 0; x < ref.n_states(); ++x) {
    for (int a = 0; a < ref.n_actions(); ++a) {
      const auto d = battery_distribution(rng, 5, -ref.bound(), ref.bound());
      table.set(x, a, scale_shift(d, 1.0, ref.at(x, a).mean() - d.mean()));
    }
  }
  return table;
}

// Direct per-component evaluation of the projection weights; the second
// route of the dual-route projection check.
std::vector<double> direct_projection_reference(const CategoricalSupport& s,
                                                const DiscreteDistribution& target) {
  std::vector<double> out(static_cast<std::size_t>(s.n_atoms()), 0.0);
  for (int j = 0; j < target.size(); ++j) {
    const double y = s.clamp(target.atom(j));
    for (int i = 0; i < s.n_atoms(); ++i) {
      const double w = std::min(std::max(1.0 - std::abs(y - s.atom(i)) / s.delta_z(), 0.0), 1.0);
      out[static_cast<std::size_t>(i)] += target.prob(j) * w;
    }
  }
  return out;
}

std::vector<double> central_differences(const std::function<double(std::span<const double>)>& fn,
                                        std::span<const double> x, double h) {
  std::vector<double> grad(x.size());
  std::vector<double> probe(x.begin(), x.end());
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = fn(probe);
    probe[i] = x[i] - h;
    const double down = fn(probe);
    probe[i] = x[i];
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

std::string csv_distribution(const DiscreteDistribution& d) {
  std::ostringstream os;
  os.precision(17);
  write_distribution_csv(os, d);
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// noncontraction_demo
// ---------------------------------------------------------------------------

ExperimentReport run_noncontraction_demo(const ExperimentConfig& config) {
  ExperimentReport report;
  report.experiment = "noncontraction_demo";
  report.config = config.to_json();

  const double eps = config.epsilon;
  const TabularMdp mdp = build_noncontraction_mdp(eps);
  const auto [z, z_star] = noncontraction_tables(eps);

  const double before = max_wasserstein(z, z_star, 1.0);
  const auto tz = dist_bellman_opt(z, mdp);
  const auto tz_star = dist_bellman_opt(z_star, mdp);
  const double after = max_wasserstein(tz, tz_star, 1.0);

  const double expected_before = 2.0 * eps;
  const double expected_after = 0.5 * std::abs(1.0 - eps) + 0.5 * std::abs(1.0 + eps);

  report.results = json{{"epsilon", eps},
                        {"dbar1_before", before},
                        {"dbar1_after", after},
                        {"expansion_ratio", eps > 0.0 ? after / before : 0.0}};
  report.expectations.push_back(
      expect_close("dbar1(Z, Z*) equals 2 epsilon", before, expected_before, 1e-12));
  report.expectations.push_back(
      expect_close("dbar1(TZ, TZ*) equals (|1-eps|+|1+eps|)/2", after, expected_after, 1e-12));
  report.expectations.push_back(expect_true("operator expanded the distance", after > before));
  return report;
}

// ---------------------------------------------------------------------------
// oscillation_demo
// ---------------------------------------------------------------------------

ExperimentReport run_oscillation_demo(const ExperimentConfig& config) {
  ExperimentReport report;
  report.experiment = "oscillation_demo";
  report.config = config.to_json();

  const TabularMdp mdp = build_noncontraction_mdp(0.0);
  const auto [z, z_star] = noncontraction_tables(0.0);

  IterateOptions opts;
  opts.tol = 1e-9;
  opts.max_iters = 10;

  const TableOperator adversarial = [&](const ValueDistributionTable& table) {
    return dist_bellman_opt(table, mdp, oscillating_tie_break());
  };
  const IterationReport bad = iterate(adversarial, z_star, opts);

  const TableOperator ordered = [&](const ValueDistributionTable& table) {
    return dist_bellman_opt(table, mdp);
  };
  IterateOptions opts2;
  opts2.tol = 1e-9;
  opts2.max_iters = 50;
  const IterationReport good = iterate(ordered, z_star, opts2);

  double min_delta = std::numeric_limits<double>::infinity();
  for (double d : bad.deltas) min_delta = std::min(min_delta, d);

  report.results = json{{"adversarial", iteration_report_to_json(bad)},
                        {"ordered", iteration_report_to_json(good)}};
  report.expectations.push_back(expect_true("adversarial tie rule cycles", bad.cycle_detected));
  report.expectations.push_back(
      expect_close("detected cycle period", static_cast<double>(bad.cycle_period), 2.0, 0.0));
  report.expectations.push_back(
      expect_le("cycle detected within 10 iterations", static_cast<double>(bad.iterations), 10.0));
  report.expectations.push_back(
      expect_ge("adversarial deltas stay bounded away from zero", min_delta, 0.5));
  report.expectations.push_back(
      expect_true("lowest-index tie rule converges to a fixed point", good.converged));
  return report;
}

// ---------------------------------------------------------------------------
// contraction_suite
// ---------------------------------------------------------------------------

ExperimentReport run_contraction_suite(const ExperimentConfig& config) {
  ExperimentReport report;
  report.experiment = "contraction_suite";
  report.config = config.to_json();

  const std::array<double, 3> gammas{0.3, 0.5, 0.9};

  // --- Policy evaluation contraction, variance contraction, mean
  // contraction of the optimality operator (one battery of 100 MDPs).
  double worst_pe_excess = -std::numeric_limits<double>::infinity();
  double worst_var_excess = -std::numeric_limits<double>::infinity();
  double worst_mean_excess = -std::numeric_limits<double>::infinity();
  {
    Rng rng = Rng::child(config.seed, "suite-operators");
    for (int k = 0; k < 100; ++k) {
      const double gamma = gammas[static_cast<std::size_t>(k % 3)];
      const TabularMdp mdp = battery_mdp(rng, 6, 3, gamma);
      const PolicyTable pi = battery_policy(rng, mdp.n_states(), mdp.n_actions());
      const double bound = value_bound(mdp);

      const auto z1 = battery_table(rng, mdp.n_states(), mdp.n_actions(), bound);
      const auto z2 = battery_table(rng, mdp.n_states(), mdp.n_actions(), bound);
      const auto t1 = dist_bellman_pe_exact(z1, mdp, pi);
      const auto t2 = dist_bellman_pe_exact(z2, mdp, pi);
      for (double p : {1.0, 2.0, kInfP}) {
        const double den = max_wasserstein(z1, z2, p);
        if (den < 1e-9) continue;
        worst_pe_excess = std::max(worst_pe_excess, max_wasserstein(t1, t2, p) / den - gamma);
      }

      // Variance contraction on mean-matched pairs (with differing means
      // the mixture over successors adds a variance-of-means term the
      // gamma^2 bound does not cover).
      const auto z3 = battery_table_with_means(rng, z1);
      const double var_den = variance_table(z1).max_abs_diff(variance_table(z3));
      if (var_den > 1e-9) {
        const double var_num = variance_table(t1).max_abs_diff(
            variance_table(dist_bellman_pe_exact(z3, mdp, pi)));
        worst_var_excess = std::max(worst_var_excess, var_num / var_den - gamma * gamma);
      }

      // Mean contraction of the greedy optimality operator.
      const double mean_den = z1.mean_table().max_abs_diff(z2.mean_table());
      if (mean_den > 1e-9) {
        const double mean_num = dist_bellman_opt(z1, mdp).mean_table().max_abs_diff(
            dist_bellman_opt(z2, mdp).mean_table());
        worst_mean_excess = std::max(worst_mean_excess, mean_num / mean_den - gamma);
      }
    }
  }

  // The expansion witness: distributional distance grows, means contract.
  double witness_dist_ratio = 0.0;
  double witness_mean_excess = 0.0;
  {
    const TabularMdp mdp = build_noncontraction_mdp(0.1);
    const auto [z, z_star] = noncontraction_tables(0.1);
    const auto tz = dist_bellman_opt(z, mdp);
    const auto tz_star = dist_bellman_opt(z_star, mdp);
    witness_dist_ratio = max_wasserstein(tz, tz_star, 1.0) / max_wasserstein(z, z_star, 1.0);
    witness_mean_excess = tz.mean_table().max_abs_diff(tz_star.mean_table()) /
                              z.mean_table().max_abs_diff(z_star.mean_table()) -
                          1.0;  // gamma = 1 here
    worst_mean_excess = std::max(worst_mean_excess, witness_mean_excess);
  }

  // --- Projection battery (10^4 randomized targets, both routes).
  double worst_mass = 0.0;
  double worst_mean = 0.0;
  double worst_linear = 0.0;
  double worst_route_gap = 0.0;
  {
    Rng rng = Rng::child(config.seed, "suite-projection");
    for (int k = 0; k < 10000; ++k) {
      const double v_min = rng.uniform(-10.0, 5.0);
      const CategoricalSupport s(v_min, v_min + rng.uniform(0.5, 15.0), 2 + rng.uniform_int(30));
      const double pad = 0.5 * (s.v_max() - s.v_min());
      const int n = 1 + rng.uniform_int(6);
      std::vector<double> atoms(static_cast<std::size_t>(n));
      std::vector<double> probs(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        atoms[static_cast<std::size_t>(i)] = rng.uniform_int(3) == 0
                                                 ? s.atom(rng.uniform_int(s.n_atoms()))
                                                 : rng.uniform(s.v_min() - pad, s.v_max() + pad);
        probs[static_cast<std::size_t>(i)] = rng.uniform(0.05, 1.0);
      }
      const auto target = make_discrete(atoms, probs, 0.0);
      const auto m = project(s, target);

      NeumaierSum mass;
      for (double p : m.probs()) mass.add(p);
      worst_mass = std::max(worst_mass, std::abs(mass.value() - 1.0));

      if (target.min_atom() >= s.v_min() && target.max_atom() <= s.v_max())
        worst_mean = std::max(worst_mean, std::abs(m.mean() - target.mean()));

      const auto direct = direct_projection_reference(s, target);
      for (int i = 0; i < s.n_atoms(); ++i)
        worst_route_gap =
            std::max(worst_route_gap, std::abs(m.prob(i) - direct[static_cast<std::size_t>(i)]));

      if (k % 4 == 0) {
        const auto other = battery_distribution(rng, 4, s.v_min(), s.v_max());
        const double w = rng.uniform(0.1, 0.9);
        const auto mixed = project(s, mixture({{w, target}, {1.0 - w, other}}, 0.0));
        const auto m2 = project(s, other);
        for (int i = 0; i < s.n_atoms(); ++i) {
          worst_linear =
              std::max(worst_linear, std::abs(mixed.prob(i) - (w * m.prob(i) + (1.0 - w) * m2.prob(i))));
        }
      }
    }
  }

  // --- Gradient checks (10^3 each).
  double worst_ce_fd = 0.0;
  double worst_w1_fd = 0.0;
  {
    Rng rng = Rng::child(config.seed, "suite-gradients");
    for (int k = 0; k < 1000; ++k) {
      const double v_min = rng.uniform(-5.0, 2.0);
      const CategoricalSupport s(v_min, v_min + rng.uniform(0.5, 8.0), 2 + rng.uniform_int(14));
      const int n = s.n_atoms();
      std::vector<double> logits(static_cast<std::size_t>(n));
      for (double& v : logits) v = rng.uniform(-2.0, 2.0);
      std::vector<double> mraw(static_cast<std::size_t>(n));
      double sum = 0.0;
      for (double& v : mraw) {
        v = rng.uniform(0.0, 1.0);
        sum += v;
      }
      for (double& v : mraw) v /= sum;
      const CategoricalDistribution target(s, mraw);
      const auto lg = ce_loss_and_gradient(target, logits);
      const auto fd = central_differences(
          [&](std::span<const double> point) { return ce_loss_and_gradient(target, point).loss; },
          logits, 1e-6);
      for (int i = 0; i < n; ++i)
        worst_ce_fd = std::max(
            worst_ce_fd, std::abs(lg.grad[static_cast<std::size_t>(i)] - fd[static_cast<std::size_t>(i)]));
    }

    int tested = 0;
    while (tested < 1000) {
      const double v_min = rng.uniform(-5.0, 2.0);
      const CategoricalSupport s(v_min, v_min + rng.uniform(0.5, 8.0), 2 + rng.uniform_int(14));
      const int n = s.n_atoms();
      std::vector<double> logits(static_cast<std::size_t>(n));
      for (double& v : logits) v = rng.uniform(-2.0, 2.0);
      const auto target = battery_distribution(rng, 5, s.v_min() - 2.0, s.v_max() + 2.0);

      // Skip near-kink instances: a positive-length segment where the
      // c.d.f.s nearly agree makes the loss non-differentiable.
      LogitTable theta(s, 1, 1);
      std::copy(logits.begin(), logits.end(), theta.logits(0, 0).begin());
      const auto self = theta.distribution(0, 0).to_discrete();
      std::vector<double> cuts;
      for (int i = 0; i < n; ++i) cuts.push_back(s.atom(i));
      for (int i = 0; i < target.size(); ++i) cuts.push_back(target.atom(i));
      std::sort(cuts.begin(), cuts.end());
      bool near_kink = false;
      for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        if (cuts[i + 1] - cuts[i] <= 1e-9) continue;
        const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
        if (std::abs(self.cdf(mid) - target.cdf(mid)) < 1e-4) near_kink = true;
      }
      if (near_kink) continue;
      ++tested;

      const auto lg = wasserstein_loss_and_subgradient(logits, s, target);
      const auto fd = central_differences(
          [&](std::span<const double> point) {
            return wasserstein_loss_and_subgradient(point, s, target).loss;
          },
          logits, 1e-6);
      for (int i = 0; i < n; ++i)
        worst_w1_fd = std::max(
            worst_w1_fd, std::abs(lg.grad[static_cast<std::size_t>(i)] - fd[static_cast<std::size_t>(i)]));
    }
  }

  // --- Metric axiom / P1-P3 / partition / monotonicity battery
  // (8 properties x 1250 instances = 10^4 randomized cases).
  int metric_violations = 0;
  {
    Rng rng = Rng::child(config.seed, "suite-metrics");
    const auto scaled = [](const DiscreteDistribution& u, double a) {
      std::vector<double> atoms(u.atoms());
      for (double& v : atoms) v *= a;
      return make_discrete(std::move(atoms), u.probs(), 0.0);
    };
    for (int k = 0; k < 1250; ++k) {
      const double p = k % 3 == 0 ? 1.0 : (k % 3 == 1 ? 2.0 : kInfP);
      const auto u = battery_distribution(rng, 5, -5.0, 5.0);
      const auto v = battery_distribution(rng, 5, -5.0, 5.0);
      const auto w = battery_distribution(rng, 5, -5.0, 5.0);

      const double duv = wasserstein(u, v, p);
      if (std::abs(duv - wasserstein(v, u, p)) > 1e-12) ++metric_violations;   // symmetry
      if (duv < 0.0 || wasserstein(u, u, p) != 0.0) ++metric_violations;       // identity
      if (duv > wasserstein(u, w, p) + wasserstein(w, v, p) + 1e-9) ++metric_violations;
      if (wasserstein(u, v, 1.0) > wasserstein(u, v, 2.0) + 1e-12 ||
          wasserstein(u, v, 2.0) > wasserstein(u, v, kInfP) + 1e-12)
        ++metric_violations;  // monotone in p

      // P1: scaling.
      const double a = rng.uniform(-2.0, 2.0);
      const double lhs1 = a == 0.0 ? 0.0 : wasserstein(scaled(u, a), scaled(v, a), p);
      if (lhs1 > std::abs(a) * duv + 1e-9) ++metric_violations;

      // P2: independent additive shift.
      const auto shift = battery_distribution(rng, 3, -2.0, 2.0);
      std::vector<std::pair<double, DiscreteDistribution>> su;
      std::vector<std::pair<double, DiscreteDistribution>> sv;
      for (int i = 0; i < shift.size(); ++i) {
        su.emplace_back(shift.prob(i), scale_shift(u, 1.0, shift.atom(i)));
        sv.emplace_back(shift.prob(i), scale_shift(v, 1.0, shift.atom(i)));
      }
      if (wasserstein(mixture(su), mixture(sv), p) > duv + 1e-9) ++metric_violations;

      // P3: independent nonnegative product.
      const auto mult = k % 2 == 0 ? make_discrete({0.0, 1.0}, {0.4, 0.6})
                                   : battery_distribution(rng, 3, 0.0, 2.0);
      std::vector<std::pair<double, DiscreteDistribution>> pu;
      std::vector<std::pair<double, DiscreteDistribution>> pv;
      double norm_p = 0.0;
      for (int i = 0; i < mult.size(); ++i) {
        pu.emplace_back(mult.prob(i), scaled(u, mult.atom(i)));
        pv.emplace_back(mult.prob(i), scaled(v, mult.atom(i)));
        if (!std::isinf(p)) norm_p += mult.prob(i) * std::pow(std::abs(mult.atom(i)), p);
      }
      const double mult_norm =
          std::isinf(p) ? std::max(std::abs(mult.min_atom()), std::abs(mult.max_atom()))
                        : std::pow(norm_p, 1.0 / p);
      if (wasserstein(mixture(pu), mixture(pv), p) > mult_norm * duv + 1e-9) ++metric_violations;

      // Partition upper bound, at p = 1 where it is a theorem: the masked
      // law of A_i U can route mass through the shared zero atom, which for
      // p > 1 makes the per-event distance undercount the conditional gap
      // (counterexamples are easy to generate; see the search below).
      const int parts = 2 + rng.uniform_int(3);
      std::vector<double> weights(static_cast<std::size_t>(parts));
      double wsum = 0.0;
      for (double& x : weights) {
        x = rng.uniform(0.05, 1.0);
        wsum += x;
      }
      for (double& x : weights) x /= wsum;
      std::vector<std::pair<double, DiscreteDistribution>> u_parts;
      std::vector<std::pair<double, DiscreteDistribution>> v_parts;
      std::vector<std::pair<DiscreteDistribution, DiscreteDistribution>> conds;
      for (int i = 0; i < parts; ++i) {
        conds.emplace_back(battery_distribution(rng, 4, -5.0, 5.0),
                           battery_distribution(rng, 4, -5.0, 5.0));
        u_parts.emplace_back(weights[static_cast<std::size_t>(i)], conds.back().first);
        v_parts.emplace_back(weights[static_cast<std::size_t>(i)], conds.back().second);
      }
      double rhs = 0.0;
      for (int i = 0; i < parts; ++i) {
        const double wi = weights[static_cast<std::size_t>(i)];
        rhs += wasserstein(
            mixture({{wi, conds[static_cast<std::size_t>(i)].first},
                     {1.0 - wi, DiscreteDistribution::point_mass(0.0)}}),
            mixture({{wi, conds[static_cast<std::size_t>(i)].second},
                     {1.0 - wi, DiscreteDistribution::point_mass(0.0)}}),
            1.0);
      }
      if (wasserstein(mixture(u_parts), mixture(v_parts), 1.0) > rhs + 1e-9) ++metric_violations;
    }
  }

  // Informational: how often random instances break the partition bound at
  // p > 1 (where it does not hold in general).
  int partition_p2_violations = 0;
  int partition_pinf_violations = 0;
  {
    Rng rng = Rng::child(config.seed, "suite-partition-search");
    for (int k = 0; k < 400; ++k) {
      const double p = k % 2 == 0 ? 2.0 : kInfP;
      const double w0 = rng.uniform(0.2, 0.8);
      const std::array<double, 2> weights{w0, 1.0 - w0};
      std::vector<std::pair<double, DiscreteDistribution>> u_parts;
      std::vector<std::pair<double, DiscreteDistribution>> v_parts;
      std::vector<std::pair<DiscreteDistribution, DiscreteDistribution>> conds;
      for (int i = 0; i < 2; ++i) {
        conds.emplace_back(battery_distribution(rng, 4, -5.0, 5.0),
                           battery_distribution(rng, 4, -5.0, 5.0));
        u_parts.emplace_back(weights[static_cast<std::size_t>(i)], conds.back().first);
        v_parts.emplace_back(weights[static_cast<std::size_t>(i)], conds.back().second);
      }
      double rhs = 0.0;
      for (int i = 0; i < 2; ++i) {
        const double wi = weights[static_cast<std::size_t>(i)];
        rhs += wasserstein(
            mixture({{wi, conds[static_cast<std::size_t>(i)].first},
                     {1.0 - wi, DiscreteDistribution::point_mass(0.0)}}),
            mixture({{wi, conds[static_cast<std::size_t>(i)].second},
                     {1.0 - wi, DiscreteDistribution::point_mass(0.0)}}),
            p);
      }
      if (wasserstein(mixture(u_parts), mixture(v_parts), p) > rhs + 1e-9) {
        if (std::isinf(p))
          ++partition_pinf_violations;
        else
          ++partition_p2_violations;
      }
    }
  }

  // --- Informational: search for instances where the evaluation operator
  // expands total variation or Kolmogorov distance (no metric like that is
  // contracted by it in general; found instances are reported, not
  // asserted).
  int tv_expansions = 0;
  int kolmogorov_expansions = 0;
  {
    Rng rng = Rng::child(config.seed, "suite-noncontraction-search");
    for (int k = 0; k < 200; ++k) {
      const double gamma = gammas[static_cast<std::size_t>(k % 3)];
      const TabularMdp mdp = battery_mdp(rng, 4, 2, gamma);
      const PolicyTable pi = battery_policy(rng, mdp.n_states(), mdp.n_actions());
      const double bound = value_bound(mdp);
      const auto z1 = battery_table(rng, mdp.n_states(), mdp.n_actions(), bound);
      const auto z2 = battery_table(rng, mdp.n_states(), mdp.n_actions(), bound);
      const auto t1 = dist_bellman_pe_exact(z1, mdp, pi);
      const auto t2 = dist_bellman_pe_exact(z2, mdp, pi);

      double tv_before = 0.0, tv_after = 0.0, ko_before = 0.0, ko_after = 0.0;
      for (int x = 0; x < mdp.n_states(); ++x) {
        for (int a = 0; a < mdp.n_actions(); ++a) {
          tv_before = std::max(tv_before, total_variation(z1.at(x, a), z2.at(x, a)));
          tv_after = std::max(tv_after, total_variation(t1.at(x, a), t2.at(x, a)));
          ko_before = std::max(ko_before, kolmogorov(z1.at(x, a), z2.at(x, a)));
          ko_after = std::max(ko_after, kolmogorov(t1.at(x, a), t2.at(x, a)));
        }
      }
      if (tv_after > gamma * tv_before + 1e-9) ++tv_expansions;
      if (ko_after > gamma * ko_before + 1e-9) ++kolmogorov_expansions;
    }
  }

  report.results =
      json{{"operator_battery",
            {{"instances", 100},
             {"worst_pe_ratio_excess", worst_pe_excess},
             {"worst_variance_ratio_excess", worst_var_excess},
             {"worst_mean_ratio_excess", worst_mean_excess},
             {"expansion_witness_dist_ratio", witness_dist_ratio}}},
           {"projection_battery",
            {{"instances", 10000},
             {"worst_mass_error", worst_mass},
             {"worst_unclipped_mean_error", worst_mean},
             {"worst_linearity_error", worst_linear},
             {"worst_two_route_gap", worst_route_gap}}},
           {"gradient_battery",
            {{"instances", 1000}, {"worst_ce_fd_gap", worst_ce_fd}, {"worst_w1_fd_gap", worst_w1_fd}}},
           {"metric_battery", {{"cases", 10000}, {"violations", metric_violations}}},
           {"partition_beyond_p1_search",
            {{"instances", 400},
             {"p2_violations_found", partition_p2_violations},
             {"pinf_violations_found", partition_pinf_violations}}},
           {"noncontraction_search",
            {{"instances", 200},
             {"total_variation_expansions", tv_expansions},
             {"kolmogorov_expansions", kolmogorov_expansions}}}};

  report.expectations.push_back(
      expect_le("policy evaluation d-bar ratio minus gamma", worst_pe_excess, 1e-9));
  report.expectations.push_back(
      expect_le("variance ratio minus gamma^2 (mean-matched pairs)", worst_var_excess, 1e-9));
  report.expectations.push_back(
      expect_le("optimality-operator mean ratio minus gamma", worst_mean_excess, 1e-9));
  report.expectations.push_back(
      expect_ge("expansion witness: distributional ratio exceeds 1", witness_dist_ratio, 1.0));
  report.expectations.push_back(expect_le("projection mass error", worst_mass, 1e-12));
  report.expectations.push_back(expect_le("projection unclipped mean error", worst_mean, 1e-12));
  report.expectations.push_back(expect_le("projection linearity error", worst_linear, 1e-12));
  report.expectations.push_back(
      expect_le("projection two-route agreement", worst_route_gap, 1e-12));
  report.expectations.push_back(
      expect_le("cross-entropy gradient vs central differences", worst_ce_fd, 1e-6));
  report.expectations.push_back(
      expect_le("wasserstein subgradient vs central differences", worst_w1_fd, 1e-6));
  report.expectations.push_back(expect_le("metric battery violations",
                                          static_cast<double>(metric_violations), 0.0));
  return report;
}

// ---------------------------------------------------------------------------
// nonstationary_demo
// ---------------------------------------------------------------------------

ExperimentReport run_nonstationary_demo(const ExperimentConfig& config) {
  ExperimentReport report;
  report.experiment = "nonstationary_demo";
  report.config = config.to_json();

  const int rollouts = config.rollouts > 0 ? config.rollouts : 100000;
  const TabularMdp mdp = build_nonstationary_mdp();
  RolloutOptions opts;
  opts.n_rollouts = rollouts;
  opts.horizon = 40;

  const PolicyTable always_first = PolicyTable::deterministic(1, 2, {0});
  const PolicyTable always_second = PolicyTable::deterministic(1, 2, {1});

  Rng rng_a = Rng::child(config.seed, "ns-always-first");
  const auto law_first = monte_carlo_returns(mdp, always_first, 0, 0, opts, rng_a);
  Rng rng_b = Rng::child(config.seed, "ns-always-second");
  const auto law_second = monte_carlo_returns(mdp, always_second, 0, 1, opts, rng_b);
  // First action 0, then the always-second policy.
  Rng rng_c = Rng::child(config.seed, "ns-mixed");
  const auto law_mixed = monte_carlo_returns(mdp, always_second, 0, 0, opts, rng_c);

  const double k_first = kolmogorov(law_first, DiscreteDistribution::point_mass(1.0));
  const double k_second = kolmogorov_to_uniform(law_second, 0.0, 2.0);
  const double k_mixed = kolmogorov_to_uniform(law_mixed, 0.5, 1.5);

  // Sweep over stationary mixing probabilities.
  const std::array<double, 5> ps{0.0, 0.25, 0.5, 0.75, 1.0};
  double min_stationary_gap = std::numeric_limits<double>::infinity();
  std::ostringstream sweep_csv;
  sweep_csv.precision(17);
  sweep_csv << "p,kolmogorov_to_nonstationary\n";
  json sweep = json::array();
  for (std::size_t i = 0; i < ps.size(); ++i) {
    const double p = ps[i];
    const PolicyTable stationary(1, 2, {{1.0 - p, p}});
    Rng rng_p = Rng::child(config.seed, "ns-stationary-" + std::to_string(i));
    std::vector<std::pair<double, DiscreteDistribution>> parts;
    if (p < 1.0)
      parts.emplace_back(1.0 - p, monte_carlo_returns(mdp, stationary, 0, 0, opts, rng_p));
    if (p > 0.0)
      parts.emplace_back(p, monte_carlo_returns(mdp, stationary, 0, 1, opts, rng_p));
    const auto law_p = mixture(parts);
    const double gap = kolmogorov(law_p, law_mixed);
    min_stationary_gap = std::min(min_stationary_gap, gap);
    sweep.push_back(json{{"p", p}, {"kolmogorov_to_nonstationary", gap}});
    sweep_csv << p << ',' << gap << '\n';
  }

  report.results = json{{"rollouts", rollouts},
                        {"k_always_first_vs_point_mass_1", k_first},
                        {"k_always_second_vs_uniform_0_2", k_second},
                        {"k_mixed_vs_uniform_half_threehalves", k_mixed},
                        {"min_stationary_gap", min_stationary_gap},
                        {"stationary_sweep", sweep}};
  report.artifacts["nonstationary_sweep.csv"] = sweep_csv.str();
  report.artifacts["nonstationary_always_first.csv"] = csv_distribution(law_first);
  report.artifacts["nonstationary_always_second.csv"] = csv_distribution(law_second);
  report.artifacts["nonstationary_mixed.csv"] = csv_distribution(law_mixed);

  report.expectations.push_back(
      expect_le("always-first law vs point mass at 1", k_first, 0.001));
  report.expectations.push_back(
      expect_le("always-second law vs uniform on [0,2]", k_second, 0.02));
  report.expectations.push_back(
      expect_le("nonstationary law vs uniform on [1/2,3/2]", k_mixed, 0.02));
  report.expectations.push_back(expect_ge("gap between the nonstationary law and every stationary law",
                                          min_stationary_gap, 0.05));
  return report;
}

// ---------------------------------------------------------------------------
// sample_wasserstein_demo
// ---------------------------------------------------------------------------

ExperimentReport run_sample_wasserstein_demo(const ExperimentConfig& config) {
  ExperimentReport report;
  report.experiment = "sample_wasserstein_demo";
  report.config = config.to_json();

  const CategoricalSupport support(0.0, 1.0, 2);
  const auto mix = make_discrete({0.0, 1.0}, {0.5, 0.5});
  const auto part0 = DiscreteDistribution::point_mass(0.0);
  const auto part1 = DiscreteDistribution::point_mass(1.0);

  const auto model = [&](double p) {
    return p <= 0.0   ? DiscreteDistribution::point_mass(1.0)
           : p >= 1.0 ? DiscreteDistribution::point_mass(0.0)
                      : make_discrete({0.0, 1.0}, {p, 1.0 - p});
  };

  // Swept curves: true distance, analytic expected per-sample distance, and
  // a Monte-Carlo estimate of the latter.
  const TabularMdp mdp = build_sample_wasserstein_mdp();
  Rng rng = Rng::child(config.seed, "sw-sampling");
  const int draws = 10000;
  std::vector<double> samples(static_cast<std::size_t>(draws));
  for (double& r : samples) r = mdp.reward(0, 0).sample(rng);

  double worst_true_gap = 0.0;
  double worst_expected_gap = 0.0;
  double worst_mc_gap = 0.0;
  std::ostringstream curve_csv;
  curve_csv.precision(17);
  curve_csv << "p,true_d1,expected_sample_d1,mc_sample_d1\n";
  json curve = json::array();
  for (int i = 0; i <= 20; ++i) {
    const double p = 0.05 * i;
    const auto q = model(p);
    const double true_d1 = wasserstein(q, mix, 1.0);
    const double expected = 0.5 * wasserstein(q, part0, 1.0) + 0.5 * wasserstein(q, part1, 1.0);
    NeumaierSum mc;
    for (double r : samples)
      mc.add(wasserstein(q, r == 0.0 ? part0 : part1, 1.0));
    const double mc_mean = mc.value() / draws;

    worst_true_gap = std::max(worst_true_gap, std::abs(true_d1 - std::abs(p - 0.5)));
    if (i > 0 && i < 20) {
      worst_expected_gap = std::max(worst_expected_gap, std::abs(expected - 0.5));
      worst_mc_gap = std::max(worst_mc_gap, std::abs(mc_mean - 0.5));
    }
    curve.push_back(json{{"p", p},
                         {"true_d1", true_d1},
                         {"expected_sample_d1", expected},
                         {"mc_sample_d1", mc_mean}});
    curve_csv << p << ',' << true_d1 << ',' << expected << ',' << mc_mean << '\n';
  }

  // Gradient descent from p0 = 0.3: on the expected per-sample loss the
  // gradient cancels, so the iterate cannot move toward 1/2; on the true
  // loss it reaches 1/2.
  const double p0 = 0.3;
  std::vector<double> theta_expected{std::log(p0), std::log(1.0 - p0)};
  std::vector<double> theta_true = theta_expected;
  const double step = 2e-3;
  const int iters = 5000;
  for (int k = 0; k < iters; ++k) {
    const auto g0 = wasserstein_loss_and_subgradient(theta_expected, support, part0);
    const auto g1 = wasserstein_loss_and_subgradient(theta_expected, support, part1);
    for (int i = 0; i < 2; ++i) {
      theta_expected[static_cast<std::size_t>(i)] -=
          step * 0.5 * (g0.grad[static_cast<std::size_t>(i)] + g1.grad[static_cast<std::size_t>(i)]);
    }
    const auto gt = wasserstein_loss_and_subgradient(theta_true, support, mix);
    for (int i = 0; i < 2; ++i)
      theta_true[static_cast<std::size_t>(i)] -= step * gt.grad[static_cast<std::size_t>(i)];
  }
  const auto final_p = [](const std::vector<double>& theta) {
    const double e0 = std::exp(theta[0]);
    const double e1 = std::exp(theta[1]);
    return e0 / (e0 + e1);
  };
  const double p_expected = final_p(theta_expected);
  const double p_true = final_p(theta_true);

  report.results = json{{"curve", curve},
                        {"gd_start", p0},
                        {"gd_expected_sample_minimizer", p_expected},
                        {"gd_true_minimizer", p_true},
                        {"worst_true_gap", worst_true_gap},
                        {"worst_expected_gap", worst_expected_gap},
                        {"worst_mc_gap", worst_mc_gap}};
  report.artifacts["sample_wasserstein_curves.csv"] = curve_csv.str();

  report.expectations.push_back(
      expect_le("true d1 curve equals |p - 1/2|", worst_true_gap, 1e-3));
  report.expectations.push_back(
      expect_le("expected per-sample d1 equals 1/2 on interior p", worst_expected_gap, 1e-3));
  report.expectations.push_back(
      expect_le("Monte-Carlo per-sample d1 equals 1/2 on interior p", worst_mc_gap, 1e-2));
  report.expectations.push_back(expect_ge(
      "descent on the expected sample loss stays away from 1/2", std::abs(p_expected - 0.5), 0.19));
  report.expectations.push_back(
      expect_le("descent on the true loss reaches 1/2", std::abs(p_true - 0.5), 1e-3));
  return report;
}

// ---------------------------------------------------------------------------
// fixed_point_check
// ---------------------------------------------------------------------------

namespace {

QTable expected_pe_fixed_point(const TabularMdp& mdp, const PolicyTable& pi, double tol,
                               int max_iters) {
  QTable q(mdp.n_states(), mdp.n_actions());
  for (int k = 0; k < max_iters; ++k) {
    QTable next = expected_bellman_pe(q, mdp, pi);
    const double delta = next.max_abs_diff(q);
    q = std::move(next);
    if (delta < tol) break;
  }
  return q;
}

QTable expected_opt_fixed_point(const TabularMdp& mdp, double tol, int max_iters) {
  QTable q(mdp.n_states(), mdp.n_actions());
  for (int k = 0; k < max_iters; ++k) {
    QTable next = expected_bellman_opt(q, mdp);
    const double delta = next.max_abs_diff(q);
    q = std::move(next);
    if (delta < tol) break;
  }
  return q;
}

json cliffwalk_fixed_point_section(const CliffWalk& cw, int rollouts, int horizon,
                                   std::uint64_t seed, std::vector<Expectation>* expectations,
                                   const std::string& label) {
  const TabularMdp& mdp = cw.mdp;
  DistBellmanOptions op_opts;
  op_opts.drop_tail_mass = 1e-12;

  const TableOperator op = [&](const ValueDistributionTable& table) {
    return dist_bellman_pe_exact(table, mdp, cw.safe_policy, op_opts);
  };
  IterateOptions it;
  it.p = 1.0;
  it.tol = 5e-8;  // keeps the iterate within ~1e-6 of the fixed point
  it.max_iters = 5000;
  const IterationReport run =
      iterate(op, ValueDistributionTable(mdp.n_states(), mdp.n_actions(),
                                         value_bound(mdp, horizon)),
              it);

  RolloutOptions mc_opts;
  mc_opts.n_rollouts = rollouts;
  mc_opts.horizon = horizon;
  const auto mc = monte_carlo_table(mdp, cw.safe_policy, mc_opts, seed);
  const double dist_to_mc = max_wasserstein(run.final_table, mc, 1.0);

  const QTable expected = expected_pe_fixed_point(mdp, cw.safe_policy, 1e-12, 100000);
  const double mean_gap = run.final_table.mean_table().max_abs_diff(expected);

  if (expectations != nullptr) {
    expectations->push_back(expect_true(label + ": exact iteration converged", run.converged));
    expectations->push_back(expect_le(label + ": final d-bar delta", run.deltas.back(), 1e-6));
    expectations->push_back(
        expect_le(label + ": d-bar1 to the Monte-Carlo oracle", dist_to_mc, 1.0));
    expectations->push_back(
        expect_le(label + ": mean table vs value iteration", mean_gap, 1e-6));
  }
  return json{{"iterations", run.iterations},
              {"converged", run.converged},
              {"final_delta", run.deltas.empty() ? 0.0 : run.deltas.back()},
              {"dbar1_to_mc", dist_to_mc},
              {"mean_gap_to_value_iteration", mean_gap}};
}

}  // namespace

ExperimentReport run_fixed_point_check(const ExperimentConfig& config) {
  ExperimentReport report;
  report.experiment = "fixed_point_check";
  report.config = config.to_json();

  const int rollouts = config.rollouts > 0 ? config.rollouts : 10000;

  // Full CliffWalk.
  const CliffWalk full = build_cliffwalk();
  report.results["cliffwalk_full"] =
      cliffwalk_fixed_point_section(full, rollouts, config.mc_horizon,
                                    cell_seed(config.seed, "fp-mc-full"), &report.expectations,
                                    "cliffwalk 4x12");

  // 4x4 sub-grid.
  const CliffWalk sub = build_cliffwalk(4, 4);
  report.results["cliffwalk_4x4"] =
      cliffwalk_fixed_point_section(sub, rollouts, config.mc_horizon,
                                    cell_seed(config.seed, "fp-mc-sub"), &report.expectations,
                                    "cliffwalk 4x4");

  // Ordered-greedy optimality iteration on random MDPs at gamma = 0.9.
  {
    Rng rng = Rng::child(config.seed, "fp-random");
    bool all_converged = true;
    double worst_mean_gap = 0.0;
    for (int k = 0; k < 5; ++k) {
      const TabularMdp mdp = battery_point_reward_mdp(rng, 6, 3, 0.9);
      const TableOperator op = [&](const ValueDistributionTable& table) {
        return dist_bellman_opt(table, mdp);
      };
      IterateOptions it;
      it.tol = 1e-8;
      it.max_iters = 500;
      const IterationReport run =
          iterate(op, ValueDistributionTable(mdp.n_states(), mdp.n_actions(), value_bound(mdp)), it);
      all_converged = all_converged && run.converged;
      const QTable expected = expected_opt_fixed_point(mdp, 1e-12, 100000);
      worst_mean_gap = std::max(worst_mean_gap, run.final_table.mean_table().max_abs_diff(expected));
    }
    report.results["random_optimality"] =
        json{{"instances", 5}, {"all_converged", all_converged}, {"worst_mean_gap", worst_mean_gap}};
    report.expectations.push_back(
        expect_true("ordered greedy iteration converges on random MDPs", all_converged));
    report.expectations.push_back(
        expect_le("random MDP mean table vs value iteration", worst_mean_gap, 1e-6));
  }

  // Optional user-supplied MDP: exact policy evaluation under the uniform
  // policy.
  if (!config.mdp_file.empty()) {
    std::ifstream in(config.mdp_file);
    if (!in) throw ConfigError("cannot open MDP file " + config.mdp_file.string());
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ConfigError(std::string("malformed MDP JSON: ") + e.what());
    }
    const TabularMdp custom = mdp_from_json(j);
    const PolicyTable uniform = PolicyTable::uniform(custom.n_states(), custom.n_actions());
    DistBellmanOptions op_opts;
    op_opts.drop_tail_mass = 1e-12;
    const TableOperator op = [&](const ValueDistributionTable& table) {
      return dist_bellman_pe_exact(table, custom, uniform, op_opts);
    };
    IterateOptions it;
    it.tol = 1e-8;
    it.max_iters = 5000;
    const IterationReport run = iterate(
        op, ValueDistributionTable(custom.n_states(), custom.n_actions(),
                                   value_bound(custom, config.mc_horizon)),
        it);
    const QTable expected = expected_pe_fixed_point(custom, uniform, 1e-12, 100000);
    const double mean_gap = run.final_table.mean_table().max_abs_diff(expected);
    report.results["custom_mdp"] = json{{"file", config.mdp_file.string()},
                                        {"iterations", run.iterations},
                                        {"converged", run.converged},
                                        {"mean_gap_to_value_iteration", mean_gap}};
    report.expectations.push_back(expect_true("custom MDP iteration converged", run.converged));
    report.expectations.push_back(
        expect_le("custom MDP mean table vs value iteration", mean_gap, 1e-6));
  }

  return report;
}

// ---------------------------------------------------------------------------
// cliffwalk_atoms
// ---------------------------------------------------------------------------

namespace {

struct Regime {
  std::string name;
  TrainRegime regime;
  TrainLoss loss;
};

const std::array<Regime, 4> kRegimes{{{"supervised_ce", TrainRegime::supervised_target,
                                       TrainLoss::categorical_ce},
                                      {"supervised_w1", TrainRegime::supervised_target,
                                       TrainLoss::wasserstein_p1},
                                      {"sampled_ce", TrainRegime::sampled_bellman,
                                       TrainLoss::categorical_ce},
                                      {"sampled_w1", TrainRegime::sampled_bellman,
                                       TrainLoss::wasserstein_p1}}};

}  // namespace

ExperimentReport run_cliffwalk_atoms(const ExperimentConfig& config) {
  ExperimentReport report;
  report.experiment = "cliffwalk_atoms";
  report.config = config.to_json();

  const int rollouts = config.rollouts > 0 ? config.rollouts : 10000;
  const CliffWalk cw = build_cliffwalk();
  const TabularMdp& mdp = cw.mdp;

  RolloutOptions mc_opts;
  mc_opts.n_rollouts = rollouts;
  mc_opts.horizon = config.mc_horizon;
  const ValueDistributionTable oracle =
      monte_carlo_table(mdp, cw.safe_policy, mc_opts, cell_seed(config.seed, "cw-mc"));

  struct Cell {
    int atom_index = 0;
    int regime_index = 0;
    int seed_index = 0;
    double final_d1 = std::numeric_limits<double>::quiet_NaN();
    bool diverged = false;
    std::string curve_csv;                // seed 0 only
    std::unique_ptr<LogitTable> theta;    // seed 0, largest atom count only
  };
  std::vector<Cell> cells;
  for (int ai = 0; ai < static_cast<int>(config.atom_counts.size()); ++ai)
    for (int ri = 0; ri < static_cast<int>(kRegimes.size()); ++ri)
      for (int si = 0; si < config.n_seeds; ++si) {
        Cell cell;
        cell.atom_index = ai;
        cell.regime_index = ri;
        cell.seed_index = si;
        cells.push_back(std::move(cell));
      }
  const int last_atom_index = static_cast<int>(config.atom_counts.size()) - 1;

  parallel_for(config.jobs, static_cast<int>(cells.size()), [&](int idx) {
    Cell& cell = cells[static_cast<std::size_t>(idx)];
    const Regime& regime = kRegimes[static_cast<std::size_t>(cell.regime_index)];
    const int n_atoms = config.atom_counts[static_cast<std::size_t>(cell.atom_index)];
    const CategoricalSupport support(-100.0, -1.0, n_atoms);

    TrainConfig tc;
    tc.regime = regime.regime;
    tc.loss = regime.loss;
    tc.sweeps = regime.regime == TrainRegime::supervised_target ? config.supervised_sweeps
                                                                : config.sampled_sweeps;
    tc.step_size = config.step_size;
    tc.policy_eval = true;
    tc.history_interval = std::max(1, tc.sweeps / 50);
    tc.seed = cell_seed(config.seed, "cw/" + regime.name + "/atoms" + std::to_string(n_atoms) +
                                         "/seed" + std::to_string(cell.seed_index));
    try {
      TrainResult result = train(mdp, cw.safe_policy, support, tc, &oracle);
      cell.final_d1 = result.history.back().mean_d1;
      if (cell.seed_index == 0) {
        std::ostringstream os;
        os.precision(17);
        write_history_csv(os, result.history);
        cell.curve_csv = os.str();
        if (cell.atom_index == last_atom_index)
          cell.theta = std::make_unique<LogitTable>(std::move(result.theta));
      }
    } catch (const std::runtime_error&) {
      cell.diverged = true;
    }
  });

  // Aggregate means and seed spreads.
  const auto cell_at = [&](int ai, int ri, int si) -> const Cell& {
    const int per_regime = config.n_seeds;
    const int per_atom = static_cast<int>(kRegimes.size()) * per_regime;
    return cells[static_cast<std::size_t>(ai * per_atom + ri * per_regime + si)];
  };
  std::vector<std::vector<double>> mean_d1(kRegimes.size());
  std::vector<std::vector<double>> spread_d1(kRegimes.size());
  int diverged_cells = 0;
  for (int ri = 0; ri < static_cast<int>(kRegimes.size()); ++ri) {
    for (int ai = 0; ai < static_cast<int>(config.atom_counts.size()); ++ai) {
      double sum = 0.0;
      int finished = 0;
      double lo = std::numeric_limits<double>::infinity();
      double hi = -std::numeric_limits<double>::infinity();
      for (int si = 0; si < config.n_seeds; ++si) {
        const Cell& cell = cell_at(ai, ri, si);
        if (cell.diverged) {
          ++diverged_cells;
          continue;
        }
        sum += cell.final_d1;
        ++finished;
        lo = std::min(lo, cell.final_d1);
        hi = std::max(hi, cell.final_d1);
      }
      mean_d1[static_cast<std::size_t>(ri)].push_back(
          finished > 0 ? sum / finished : std::numeric_limits<double>::quiet_NaN());
      spread_d1[static_cast<std::size_t>(ri)].push_back(finished > 1 ? hi - lo : 0.0);
    }
  }

  // Projection floor: distance of the projected oracle to the oracle.
  std::vector<double> floor_d1;
  for (int n_atoms : config.atom_counts) {
    const CategoricalSupport support(-100.0, -1.0, n_atoms);
    NeumaierSum acc;
    for (int x = 0; x < mdp.n_states(); ++x) {
      for (int a = 0; a < mdp.n_actions(); ++a) {
        acc.add(wasserstein(project(support, oracle.at(x, a)).to_discrete(), oracle.at(x, a), 1.0));
      }
    }
    floor_d1.push_back(acc.value() / mdp.pair_count());
  }

  // Expectations (three clauses, all on the seed-aggregated numbers).
  double worst_monotonicity_ratio = 0.0;  // categorical regimes only
  for (const char* name : {"supervised_ce", "sampled_ce"}) {
    int ri = 0;
    while (kRegimes[static_cast<std::size_t>(ri)].name != name) ++ri;
    const auto& curve = mean_d1[static_cast<std::size_t>(ri)];
    for (std::size_t i = 0; i + 1 < curve.size(); ++i) {
      worst_monotonicity_ratio = std::max(worst_monotonicity_ratio, curve[i + 1] / curve[i]);
    }
  }
  int ce_index = 2;  // sampled_ce
  int w1_index = 3;  // sampled_w1
  double min_sampled_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < config.atom_counts.size(); ++i) {
    min_sampled_gap = std::min(min_sampled_gap, mean_d1[static_cast<std::size_t>(w1_index)][i] -
                                                    mean_d1[static_cast<std::size_t>(ce_index)][i]);
  }
  double mean_spread_w1 = 0.0;
  double mean_spread_ce = 0.0;
  for (std::size_t i = 0; i < config.atom_counts.size(); ++i) {
    mean_spread_w1 += spread_d1[static_cast<std::size_t>(w1_index)][i];
    mean_spread_ce += spread_d1[static_cast<std::size_t>(ce_index)][i];
  }
  mean_spread_w1 /= static_cast<double>(config.atom_counts.size());
  mean_spread_ce /= static_cast<double>(config.atom_counts.size());
  const double spread_ratio = mean_spread_ce > 0.0
                                  ? mean_spread_w1 / mean_spread_ce
                                  : std::numeric_limits<double>::infinity();

  json curves = json::object();
  for (int ri = 0; ri < static_cast<int>(kRegimes.size()); ++ri) {
    json rows = json::array();
    std::ostringstream csv;
    csv.precision(17);
    csv << "atoms,mean_d1,spread_d1";
    for (int si = 0; si < config.n_seeds; ++si) csv << ",seed" << si << "_d1";
    csv << "\n";
    for (int ai = 0; ai < static_cast<int>(config.atom_counts.size()); ++ai) {
      json row{{"atoms", config.atom_counts[static_cast<std::size_t>(ai)]},
               {"mean_d1", mean_d1[static_cast<std::size_t>(ri)][static_cast<std::size_t>(ai)]},
               {"spread_d1", spread_d1[static_cast<std::size_t>(ri)][static_cast<std::size_t>(ai)]}};
      csv << config.atom_counts[static_cast<std::size_t>(ai)] << ','
          << mean_d1[static_cast<std::size_t>(ri)][static_cast<std::size_t>(ai)] << ','
          << spread_d1[static_cast<std::size_t>(ri)][static_cast<std::size_t>(ai)];
      json per_seed = json::array();
      for (int si = 0; si < config.n_seeds; ++si) {
        per_seed.push_back(cell_at(ai, ri, si).final_d1);
        csv << ',' << cell_at(ai, ri, si).final_d1;
      }
      csv << "\n";
      row["seeds"] = per_seed;
      rows.push_back(std::move(row));
    }
    const std::string& name = kRegimes[static_cast<std::size_t>(ri)].name;
    curves[name] = std::move(rows);
    report.artifacts["cliffwalk_atoms_" + name + ".csv"] = csv.str();
    // Seed-0 learning curve and final parameters at the largest atom count.
    const Cell& last = cell_at(static_cast<int>(config.atom_counts.size()) - 1, ri, 0);
    if (!last.curve_csv.empty())
      report.artifacts["curve_" + name + "_atoms" +
                       std::to_string(config.atom_counts.back()) + "_seed0.csv"] = last.curve_csv;
    if (last.theta != nullptr)
      report.artifacts["theta_" + name + "_atoms" + std::to_string(config.atom_counts.back()) +
                       "_seed0.json"] = logit_table_to_json(*last.theta).dump(2) + "\n";
  }

  // Cumulative distributions for five evenly spaced safe-path states (the
  // safe action's distribution), learned at the largest atom count with
  // seed 0, against the Monte-Carlo oracle.
  json cdf_states = json::array();
  {
    const int path_len = static_cast<int>(cw.safe_path_states.size());
    for (int k = 0; k < 5; ++k) {
      const int idx = k * (path_len - 1) / 4;
      const int state = cw.safe_path_states[static_cast<std::size_t>(idx)];
      const int action = cw.safe_action[static_cast<std::size_t>(state)];
      cdf_states.push_back(json{{"state", state}, {"action", action}});

      std::ostringstream csv;
      csv.precision(17);
      csv << "source,value,cdf\n";
      const auto dump = [&](const std::string& source, const DiscreteDistribution& d) {
        double cum = 0.0;
        for (int i = 0; i < d.size(); ++i) {
          cum += d.prob(i);
          csv << source << ',' << d.atom(i) << ',' << std::min(cum, 1.0) << '\n';
        }
      };
      dump("mc_oracle", oracle.at(state, action));
      for (int ri = 0; ri < 4; ++ri) {
        const Cell& cell = cell_at(last_atom_index, ri, 0);
        if (cell.theta != nullptr) {
          dump(kRegimes[static_cast<std::size_t>(ri)].name,
               cell.theta->distribution(state, action).to_discrete());
        }
      }
      report.artifacts["cdf_state" + std::to_string(state) + ".csv"] = csv.str();
    }
  }

  report.results = json{{"curves", curves},
                        {"projection_floor", floor_d1},
                        {"diverged_cells", diverged_cells},
                        {"cdf_states", cdf_states},
                        {"supervised_ce_51_floor_gap",
                         mean_d1[0].back() - floor_d1.back()},
                        {"spread_sampled_w1_mean", mean_spread_w1},
                        {"spread_sampled_ce_mean", mean_spread_ce}};

  report.expectations.push_back(expect_le(
      "categorical d1 non-increasing in atoms (5% band)", worst_monotonicity_ratio, 1.05));
  report.expectations.push_back(expect_gt(
      "sampled categorical beats sampled wasserstein at every atom count", min_sampled_gap, 0.0));
  report.expectations.push_back(expect_gt(
      "sampled wasserstein seed spread exceeds 3x categorical spread", spread_ratio, 3.0));
  return report;
}

// ---------------------------------------------------------------------------
// dispatch + persistence
// ---------------------------------------------------------------------------

ExperimentReport run_experiment(const ExperimentConfig& config, bool persist) {
  config.validate();

  using Runner = ExperimentReport (*)(const ExperimentConfig&);
  static const std::map<std::string, Runner> runners{
      {"cliffwalk_atoms", run_cliffwalk_atoms},
      {"contraction_suite", run_contraction_suite},
      {"noncontraction_demo", run_noncontraction_demo},
      {"oscillation_demo", run_oscillation_demo},
      {"nonstationary_demo", run_nonstationary_demo},
      {"sample_wasserstein_demo", run_sample_wasserstein_demo},
      {"fixed_point_check", run_fixed_point_check}};

  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report = runners.at(config.experiment)(config);
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (persist) {
    std::error_code ec;
    std::filesystem::create_directories(config.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + config.out_dir.string());

    const auto write_file = [&](const std::string& name, const std::string& content) {
      std::ofstream out(config.out_dir / name);
      if (!out) throw ConfigError("cannot write to " + (config.out_dir / name).string());
      out << content;
    };
    write_file("report.json", report.to_json().dump(2) + "\n");
    write_file("run_meta.json",
               json{{"wall_seconds", report.wall_seconds}}.dump(2) + "\n");
    for (const auto& [name, content] : report.artifacts) write_file(name, content);
  }
  return report;
}

}  // namespace distbell
