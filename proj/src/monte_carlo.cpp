#include "distbell/monte_carlo.hpp"

#include <stdexcept>

namespace distbell {

DiscreteDistribution monte_carlo_returns(const TabularMdp& mdp, const PolicyTable& policy, int x,
                                         int a, const RolloutOptions& opts, Rng& rng) {
  if (opts.n_rollouts < 1 || opts.horizon < 1)
    throw std::invalid_argument("monte_carlo_returns: need n_rollouts >= 1 and horizon >= 1");

  std::vector<double> returns(static_cast<std::size_t>(opts.n_rollouts));
  for (int k = 0; k < opts.n_rollouts; ++k) {
    int state = x;
    int action = a;
    double total = 0.0;
    double discount = 1.0;
    for (int t = 0; t < opts.horizon; ++t) {
      total += discount * mdp.reward(state, action).sample(rng);
      state = mdp.sample_successor(state, action, rng);
      if (mdp.terminal(state)) break;
      discount *= mdp.gamma();
      action = policy.sample_action(state, rng);
    }
    returns[static_cast<std::size_t>(k)] = total;
  }

  std::vector<double> weights(returns.size(), 1.0 / static_cast<double>(opts.n_rollouts));
  return make_discrete(std::move(returns), std::move(weights), opts.merge_tol);
}

ValueDistributionTable monte_carlo_table(const TabularMdp& mdp, const PolicyTable& policy,
                                         const RolloutOptions& opts, std::uint64_t root_seed) {
  ValueDistributionTable table(mdp.n_states(), mdp.n_actions(),
                               value_bound(mdp, opts.horizon) + 1.0);
  for (int x = 0; x < mdp.n_states(); ++x) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      Rng rng = Rng::child(root_seed, static_cast<std::uint64_t>(mdp.pair_index(x, a)));
      table.set(x, a, monte_carlo_returns(mdp, policy, x, a, opts, rng));
    }
  }
  return table;
}

}  // namespace distbell
