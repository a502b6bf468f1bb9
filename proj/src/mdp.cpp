#include "distbell/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <string>

#include "distbell/numeric.hpp"

namespace distbell {

namespace {

void validate_and_normalize_row(std::vector<double>& row, const char* what) {
  NeumaierSum total;
  for (double p : row) {
    if (!(p >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative probability");
    total.add(p);
  }
  const double sum = total.value();
  if (std::abs(sum - 1.0) > kProbSumTol)
    throw std::invalid_argument(std::string(what) + ": row does not sum to 1");
  for (double& p : row) p /= sum;
}

}  // namespace

TabularMdp::TabularMdp(int n_states, int n_actions, double gamma,
                       std::vector<std::vector<double>> transition,
                       std::vector<DiscreteDistribution> reward, std::vector<bool> terminal)
    : n_states_(n_states),
      n_actions_(n_actions),
      gamma_(gamma),
      transition_(std::move(transition)),
      reward_(std::move(reward)),
      terminal_(terminal.begin(), terminal.end()) {
  if (n_states < 1 || n_actions < 1)
    throw std::invalid_argument("TabularMdp: need at least one state and action");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("TabularMdp: gamma not in [0, 1]");
  const auto pairs = static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions);
  if (transition_.size() != pairs || reward_.size() != pairs ||
      terminal_.size() != static_cast<std::size_t>(n_states))
    throw std::invalid_argument("TabularMdp: table sizes do not match n_states * n_actions");

  for (auto& row : transition_) {
    if (row.size() != static_cast<std::size_t>(n_states))
      throw std::invalid_argument("TabularMdp: transition row has wrong length");
    validate_and_normalize_row(row, "TabularMdp transition");
  }

  // Terminal convention: absorbing self-loop, reward fixed at zero.
  for (int x = 0; x < n_states_; ++x) {
    if (!terminal_[static_cast<std::size_t>(x)]) continue;
    for (int a = 0; a < n_actions_; ++a) {
      const auto& row = transition_row(x, a);
      if (row[static_cast<std::size_t>(x)] != 1.0)
        throw std::invalid_argument("TabularMdp: terminal state must self-loop");
      const auto& r = reward_[static_cast<std::size_t>(pair_index(x, a))];
      if (r.size() != 1 || r.atom(0) != 0.0)
        throw std::invalid_argument("TabularMdp: terminal reward must be a point mass at 0");
    }
  }

  successors_.resize(pairs);
  for (int x = 0; x < n_states_; ++x) {
    for (int a = 0; a < n_actions_; ++a) {
      const auto& row = transition_row(x, a);
      auto& sparse = successors_[static_cast<std::size_t>(pair_index(x, a))];
      for (int y = 0; y < n_states_; ++y) {
        if (row[static_cast<std::size_t>(y)] > 0.0) sparse.emplace_back(y, row[static_cast<std::size_t>(y)]);
      }
    }
  }

  for (const auto& r : reward_)
    max_abs_reward_ = std::max({max_abs_reward_, std::abs(r.min_atom()), std::abs(r.max_atom())});

  // gamma = 1 is only accepted when a terminal state is reachable from every
  // state, so that proper (almost-surely terminating) policies exist and
  // episodic returns are well defined.
  if (gamma_ == 1.0) {
    std::vector<char> can_reach(static_cast<std::size_t>(n_states_), 0);
    std::deque<int> frontier;
    for (int x = 0; x < n_states_; ++x) {
      if (terminal_[static_cast<std::size_t>(x)]) {
        can_reach[static_cast<std::size_t>(x)] = 1;
        frontier.push_back(x);
      }
    }
    if (frontier.empty())
      throw std::invalid_argument("TabularMdp: gamma = 1 requires at least one terminal state");
    // Backward breadth-first search along positive-probability edges.
    while (!frontier.empty()) {
      const int y = frontier.front();
      frontier.pop_front();
      for (int x = 0; x < n_states_; ++x) {
        if (can_reach[static_cast<std::size_t>(x)]) continue;
        bool edge = false;
        for (int a = 0; a < n_actions_ && !edge; ++a)
          edge = transition_row(x, a)[static_cast<std::size_t>(y)] > 0.0;
        if (edge) {
          can_reach[static_cast<std::size_t>(x)] = 1;
          frontier.push_back(x);
        }
      }
    }
    for (int x = 0; x < n_states_; ++x) {
      if (!can_reach[static_cast<std::size_t>(x)])
        throw std::invalid_argument(
            "TabularMdp: gamma = 1 requires a terminal state reachable from every state");
    }
  }
}

int TabularMdp::sample_successor(int x, int a, Rng& rng) const {
  const auto& sparse = successors(x, a);
  if (sparse.size() == 1) return sparse.front().first;
  const double q = rng.uniform_open_closed();
  double cum = 0.0;
  for (const auto& [y, p] : sparse) {
    cum += p;
    if (cum >= q) return y;
  }
  return sparse.back().first;
}

double value_bound(const TabularMdp& mdp, int episodic_horizon) {
  if (mdp.gamma() < 1.0) return mdp.max_abs_reward() / (1.0 - mdp.gamma());
  return mdp.max_abs_reward() * static_cast<double>(episodic_horizon);
}

PolicyTable::PolicyTable(int n_states, int n_actions, std::vector<std::vector<double>> rows)
    : n_states_(n_states), n_actions_(n_actions), rows_(std::move(rows)) {
  if (rows_.size() != static_cast<std::size_t>(n_states))
    throw std::invalid_argument("PolicyTable: wrong number of rows");
  for (auto& row : rows_) {
    if (row.size() != static_cast<std::size_t>(n_actions))
      throw std::invalid_argument("PolicyTable: row has wrong length");
    validate_and_normalize_row(row, "PolicyTable");
  }
}

PolicyTable PolicyTable::uniform(int n_states, int n_actions) {
  std::vector<std::vector<double>> rows(
      static_cast<std::size_t>(n_states),
      std::vector<double>(static_cast<std::size_t>(n_actions), 1.0 / n_actions));
  return PolicyTable(n_states, n_actions, std::move(rows));
}

PolicyTable PolicyTable::deterministic(int n_states, int n_actions,
                                       const std::vector<int>& action) {
  return noisy_deterministic(n_states, n_actions, action, 0.0);
}

PolicyTable PolicyTable::noisy_deterministic(int n_states, int n_actions,
                                             const std::vector<int>& action, double mix) {
  if (action.size() != static_cast<std::size_t>(n_states))
    throw std::invalid_argument("PolicyTable: action map has wrong length");
  if (!(mix >= 0.0 && mix <= 1.0)) throw std::invalid_argument("PolicyTable: mix not in [0, 1]");
  std::vector<std::vector<double>> rows(
      static_cast<std::size_t>(n_states),
      std::vector<double>(static_cast<std::size_t>(n_actions), mix / n_actions));
  for (int x = 0; x < n_states; ++x) {
    const int a = action[static_cast<std::size_t>(x)];
    if (a < 0 || a >= n_actions) throw std::invalid_argument("PolicyTable: action out of range");
    rows[static_cast<std::size_t>(x)][static_cast<std::size_t>(a)] += 1.0 - mix;
  }
  return PolicyTable(n_states, n_actions, std::move(rows));
}

int PolicyTable::sample_action(int x, Rng& rng) const {
  const auto& row = rows_[static_cast<std::size_t>(x)];
  const double q = rng.uniform_open_closed();
  double cum = 0.0;
  for (int a = 0; a < n_actions_; ++a) {
    cum += row[static_cast<std::size_t>(a)];
    if (cum >= q) return a;
  }
  return n_actions_ - 1;
}

TieBreak lowest_index_tie_break() {
  return [](int, const std::vector<int>& tied, const ValueDistributionTable*) {
    return tied.front();
  };
}

PolicyTable greedy_policy(const QTable& q, const TieBreak& tie_break,
                          const ValueDistributionTable* context) {
  std::vector<int> chosen(static_cast<std::size_t>(q.n_states()), 0);
  std::vector<int> tied;
  for (int x = 0; x < q.n_states(); ++x) {
    double best = q.at(x, 0);
    for (int a = 1; a < q.n_actions(); ++a) best = std::max(best, q.at(x, a));
    tied.clear();
    for (int a = 0; a < q.n_actions(); ++a) {
      if (!std::isfinite(q.at(x, a)))
        throw std::invalid_argument("greedy_policy: non-finite action value");
      if (q.at(x, a) == best) tied.push_back(a);
    }
    chosen[static_cast<std::size_t>(x)] = tie_break(x, tied, context);
  }
  return PolicyTable::deterministic(q.n_states(), q.n_actions(), chosen);
}

}  // namespace distbell
