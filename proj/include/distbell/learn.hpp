#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "distbell/mdp.hpp"
#include "distbell/value_table.hpp"

namespace distbell {

/// Tabular softmax parametrization: one logit vector of length n_atoms per
/// (state, action) pair, all on a shared fixed support.
class LogitTable {
 public:
  LogitTable(CategoricalSupport support, int n_states, int n_actions);

  const CategoricalSupport& support() const { return support_; }
  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }

  std::span<const double> logits(int x, int a) const { return rows_[index(x, a)]; }
  std::span<double> logits(int x, int a) { return rows_[index(x, a)]; }

  /// Softmax of the row, written into out (length n_atoms).
  void probabilities(int x, int a, std::span<double> out) const;
  CategoricalDistribution distribution(int x, int a) const;

  /// Expected value under the softmax distribution: sum_i z_i p_i.
  double q_value(int x, int a) const;

  double max_abs_logit() const;
  ValueDistributionTable to_table() const;

 private:
  std::size_t index(int x, int a) const {
    return static_cast<std::size_t>(x) * static_cast<std::size_t>(n_actions_) +
           static_cast<std::size_t>(a);
  }

  CategoricalSupport support_;
  int n_states_;
  int n_actions_;
  std::vector<std::vector<double>> rows_;
};

/// One observed transition. gamma_t is 0 exactly when x_next is terminal,
/// and the MDP discount otherwise.
struct TransitionSample {
  int x;
  int a;
  double r;
  int x_next;
  double gamma_t;
};

TransitionSample draw_transition(const TabularMdp& mdp, int x, int a, Rng& rng);

/// Projects an arbitrary discrete law onto the fixed support: each target
/// atom is clamped to [v_min, v_max] and its mass split linearly between the
/// two nearest support atoms (all of it to the lower atom when it falls
/// exactly on the grid). Conserves mass exactly; preserves the mean when no
/// atom is clamped.
CategoricalDistribution project(const CategoricalSupport& support,
                                const DiscreteDistribution& target);

/// Accumulating core of project: adds the projected masses onto out, which
/// the caller zero-initializes. Exposed for allocation-free training loops.
void project_into(const CategoricalSupport& support, std::span<const double> target_atoms,
                  std::span<const double> target_masses, std::span<double> out);

/// Sample Bellman target: the next-state distribution under theta_target at
/// the greedy action (argmax of expected value, ties resolved by tie_break),
/// shifted by r, discounted by gamma_t, and projected onto the support.
CategoricalDistribution sample_bellman_target(const LogitTable& theta_target, const TabularMdp& mdp,
                                              const TransitionSample& sample,
                                              const TieBreak& tie_break = lowest_index_tie_break());

/// Policy-evaluation variant: the next action is drawn from the fixed
/// policy instead of the argmax, so the target stays a single-pair
/// projection and keeps the per-sample character of the update.
CategoricalDistribution evaluation_bellman_target(const LogitTable& theta_target,
                                                  const PolicyTable& policy,
                                                  const TransitionSample& sample, Rng& rng);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Cross-entropy of the softmax of `logits` against target m, with the
/// analytic gradient p - m.
LossGrad ce_loss_and_gradient(const CategoricalDistribution& target,
                              std::span<const double> logits);

/// Exact 1-Wasserstein distance between the softmax distribution on the
/// fixed support and an arbitrary discrete target, with an analytic
/// subgradient: the c.d.f. difference is integrated over the merged
/// breakpoints, its sign pattern differentiated with respect to the
/// probabilities, and the result chained through the softmax Jacobian.
/// Segments where the c.d.f.s agree contribute zero.
LossGrad wasserstein_loss_and_subgradient(std::span<const double> logits,
                                          const CategoricalSupport& support,
                                          const DiscreteDistribution& target);

/// Two-atom (N = 2) variant: the whole target collapses to the clamped mean
/// q of the sample Bellman target, encoded as probability
/// (q - v_min) / delta_z on v_max so the output mean equals clamp(q).
CategoricalDistribution bernoulli_target(const LogitTable& theta_target, const TabularMdp& mdp,
                                         const TransitionSample& sample,
                                         const TieBreak& tie_break = lowest_index_tie_break());

enum class TrainRegime { supervised_target, sampled_bellman };
enum class TrainLoss { categorical_ce, wasserstein_p1, bernoulli };

struct TrainConfig {
  TrainRegime regime = TrainRegime::supervised_target;
  TrainLoss loss = TrainLoss::categorical_ce;
  int sweeps = 5000;
  double step_size = 0.1;
  std::uint64_t seed = 1;
  /// Sweeps between refreshes of the frozen target parameters.
  int target_refresh_interval = 1;
  /// Substitute the fixed policy for the argmax when building sampled
  /// targets (policy evaluation); false gives the greedy control rule.
  bool policy_eval = true;
  /// Sweeps between learning-curve records; 0 picks ~100 evenly spaced.
  int history_interval = 0;
  double divergence_limit = 1e6;
};

struct TrainHistoryRow {
  int sweep;
  double mean_d1;
  double max_d1;
  double loss;
};

struct TrainResult {
  LogitTable theta;
  std::vector<TrainHistoryRow> history;
};

/// Sweeps over all (state, action) pairs, building the configured target
/// per visit (the oracle law projected onto the support, or a one-step
/// sampled Bellman target against periodically frozen parameters) and
/// applying plain gradient descent. When an oracle is given, the history
/// records mean and max d_1 between the model and oracle laws.
///
/// Throws std::runtime_error if any |logit| exceeds the divergence limit.
/// The supervised regime requires an oracle.
TrainResult train(const TabularMdp& mdp, const PolicyTable& policy,
                  const CategoricalSupport& support, const TrainConfig& config,
                  const ValueDistributionTable* oracle);

}  // namespace distbell
