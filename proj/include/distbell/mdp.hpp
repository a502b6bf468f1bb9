#pragma once

#include <functional>
#include <vector>

#include "distbell/distribution.hpp"
#include "distbell/value_table.hpp"

namespace distbell {

/// Finite Markov decision process with stochastic transitions and random
/// rewards given as discrete distributions. Terminal states are absorbing
/// self-loops with a point-mass reward at zero.
///
/// Construction validates: transition rows sum to 1 within kProbSumTol
/// (then renormalized exactly), terminal-state conventions, and for
/// gamma = 1 that a terminal state is reachable from every state.
class TabularMdp {
 public:
  TabularMdp(int n_states, int n_actions, double gamma,
             std::vector<std::vector<double>> transition,  // [x * A + a][x']
             std::vector<DiscreteDistribution> reward,     // [x * A + a]
             std::vector<bool> terminal);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double gamma() const { return gamma_; }
  bool terminal(int x) const { return terminal_[static_cast<std::size_t>(x)]; }

  int pair_index(int x, int a) const { return x * n_actions_ + a; }
  int pair_count() const { return n_states_ * n_actions_; }

  const std::vector<double>& transition_row(int x, int a) const {
    return transition_[static_cast<std::size_t>(pair_index(x, a))];
  }
  const DiscreteDistribution& reward(int x, int a) const {
    return reward_[static_cast<std::size_t>(pair_index(x, a))];
  }

  /// Successor states with positive probability, as (state, probability).
  const std::vector<std::pair<int, double>>& successors(int x, int a) const {
    return successors_[static_cast<std::size_t>(pair_index(x, a))];
  }

  int sample_successor(int x, int a, Rng& rng) const;

  /// Largest absolute reward atom over all pairs.
  double max_abs_reward() const { return max_abs_reward_; }

 private:
  int n_states_;
  int n_actions_;
  double gamma_;
  std::vector<std::vector<double>> transition_;
  std::vector<DiscreteDistribution> reward_;
  std::vector<bool> terminal_;
  std::vector<std::vector<std::pair<int, double>>> successors_;
  double max_abs_reward_ = 0.0;
};

/// Upper bound on |return| for tables over this MDP: max|R| / (1 - gamma)
/// for gamma < 1, and max|R| * episodic_horizon when gamma = 1.
double value_bound(const TabularMdp& mdp, int episodic_horizon = 500);

/// Stationary stochastic policy: one probability vector over actions per
/// state. Rows are validated and renormalized at construction.
class PolicyTable {
 public:
  PolicyTable(int n_states, int n_actions, std::vector<std::vector<double>> rows);

  static PolicyTable uniform(int n_states, int n_actions);
  /// Deterministic policy from a per-state action map.
  static PolicyTable deterministic(int n_states, int n_actions, const std::vector<int>& action);
  /// (1 - mix) * deterministic(action) + mix * uniform.
  static PolicyTable noisy_deterministic(int n_states, int n_actions,
                                         const std::vector<int>& action, double mix);

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  double prob(int x, int a) const {
    return rows_[static_cast<std::size_t>(x)][static_cast<std::size_t>(a)];
  }
  const std::vector<double>& row(int x) const { return rows_[static_cast<std::size_t>(x)]; }

  int sample_action(int x, Rng& rng) const;

 private:
  int n_states_;
  int n_actions_;
  std::vector<std::vector<double>> rows_;
};

/// Resolves ties among actions whose expected values attain the maximum.
/// `tied` holds the tied action indices in increasing order; `context` is
/// the value-distribution table the greedy step is applied to, when there is
/// one (distribution-dependent rules inspect it; it is null otherwise).
using TieBreak =
    std::function<int(int state, const std::vector<int>& tied, const ValueDistributionTable* context)>;

/// Default rule: lowest action index. Fixing one total order makes the
/// optimality operator's fixed point unique and convergence tests
/// deterministic.
TieBreak lowest_index_tie_break();

/// Deterministic greedy policy: argmax_a q(x, a) with ties resolved by the
/// supplied rule.
PolicyTable greedy_policy(const QTable& q, const TieBreak& tie_break = lowest_index_tie_break(),
                          const ValueDistributionTable* context = nullptr);

}  // namespace distbell
