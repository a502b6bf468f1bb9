#pragma once

#include "distbell/mdp.hpp"

namespace distbell {

struct RolloutOptions {
  int n_rollouts = 10000;
  int horizon = 500;
  double merge_tol = kDefaultMergeTol;
};

/// Empirical law of the discounted return from (x, a) under the policy:
/// each rollout starts with action a in state x, follows the policy until a
/// terminal state or the horizon, and records sum_t gamma^t r_t. The rng is
/// caller-owned; identical (seed, inputs) give identical output.
DiscreteDistribution monte_carlo_returns(const TabularMdp& mdp, const PolicyTable& policy, int x,
                                         int a, const RolloutOptions& opts, Rng& rng);

/// Ground-truth table: monte_carlo_returns for every pair, with the
/// per-pair stream derived from the root seed as stream id x * n_actions + a.
ValueDistributionTable monte_carlo_table(const TabularMdp& mdp, const PolicyTable& policy,
                                         const RolloutOptions& opts, std::uint64_t root_seed);

}  // namespace distbell
