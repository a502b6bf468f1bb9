#include "distbell/environments.hpp"

#include <cmath>
#include <stdexcept>

namespace distbell {

CliffWalk build_cliffwalk(int rows, int cols) {
  if (rows < 3 || cols < 3) throw std::invalid_argument("build_cliffwalk: grid too small");
  const int n_states = rows * cols;
  const int n_actions = 4;
  const int start = (rows - 1) * cols;
  const int goal = rows * cols - 1;

  const auto is_cliff = [&](int row, int col) {
    return row == rows - 1 && col > 0 && col < cols - 1;
  };

  std::vector<std::vector<double>> transition(
      static_cast<std::size_t>(n_states * n_actions),
      std::vector<double>(static_cast<std::size_t>(n_states), 0.0));
  std::vector<DiscreteDistribution> reward;
  reward.reserve(static_cast<std::size_t>(n_states * n_actions));
  std::vector<bool> terminal(static_cast<std::size_t>(n_states), false);
  terminal[static_cast<std::size_t>(goal)] = true;

  for (int row = 0; row < rows; ++row) {
    for (int col = 0; col < cols; ++col) {
      const int x = row * cols + col;
      for (int a = 0; a < n_actions; ++a) {
        if (x == goal) {
          transition[static_cast<std::size_t>(x * n_actions + a)][static_cast<std::size_t>(x)] = 1.0;
          reward.push_back(DiscreteDistribution::point_mass(0.0));
          continue;
        }
        int nrow = row;
        int ncol = col;
        switch (static_cast<CliffAction>(a)) {
          case CliffAction::up: nrow = row - 1; break;
          case CliffAction::down: nrow = row + 1; break;
          case CliffAction::left: ncol = col - 1; break;
          case CliffAction::right: ncol = col + 1; break;
        }
        // Moves off the grid leave the agent in place.
        if (nrow < 0 || nrow >= rows || ncol < 0 || ncol >= cols) {
          nrow = row;
          ncol = col;
        }
        int next = nrow * cols + ncol;
        double r = -1.0;
        if (is_cliff(nrow, ncol)) {
          next = start;
          r = -100.0;
        }
        transition[static_cast<std::size_t>(x * n_actions + a)][static_cast<std::size_t>(next)] = 1.0;
        reward.push_back(DiscreteDistribution::point_mass(r));
      }
    }
  }

  TabularMdp mdp(n_states, n_actions, 1.0, std::move(transition), std::move(reward),
                 std::move(terminal));

  // Safe-path action map: climb out of the start column, cross the top row,
  // descend the goal column. Interior states also head up first.
  std::vector<int> safe(static_cast<std::size_t>(n_states), static_cast<int>(CliffAction::up));
  for (int row = 0; row < rows; ++row) {
    for (int col = 0; col < cols; ++col) {
      const int x = row * cols + col;
      if (col == cols - 1) {
        safe[static_cast<std::size_t>(x)] = static_cast<int>(CliffAction::down);
      } else if (row == 0) {
        safe[static_cast<std::size_t>(x)] = static_cast<int>(CliffAction::right);
      }
    }
  }
  PolicyTable policy = PolicyTable::noisy_deterministic(n_states, n_actions, safe, 0.1);

  std::vector<int> path;
  for (int row = rows - 1; row >= 0; --row) path.push_back(row * cols);
  for (int col = 1; col < cols; ++col) path.push_back(col);
  for (int row = 1; row < rows; ++row) path.push_back(row * cols + cols - 1);

  return CliffWalk{std::move(mdp), std::move(policy), rows,       cols,
                   start,          goal,              std::move(safe), std::move(path)};
}

TabularMdp build_noncontraction_mdp(double epsilon) {
  const int n_states = 3;  // x0, x1, terminal sink
  const int n_actions = 2;
  std::vector<std::vector<double>> transition(
      6, std::vector<double>(static_cast<std::size_t>(n_states), 0.0));
  std::vector<DiscreteDistribution> reward;
  reward.reserve(6);

  // x0: both actions move to x1, no reward.
  for (int a = 0; a < 2; ++a) {
    transition[static_cast<std::size_t>(a)][1] = 1.0;
    reward.push_back(DiscreteDistribution::point_mass(0.0));
  }
  // x1: action 0 pays 0, action 1 pays epsilon +/- 1; both terminate.
  transition[2][2] = 1.0;
  reward.push_back(DiscreteDistribution::point_mass(0.0));
  transition[3][2] = 1.0;
  reward.push_back(make_discrete({-1.0 + epsilon, 1.0 + epsilon}, {0.5, 0.5}));
  // Terminal sink.
  for (int a = 0; a < 2; ++a) {
    transition[static_cast<std::size_t>(4 + a)][2] = 1.0;
    reward.push_back(DiscreteDistribution::point_mass(0.0));
  }

  return TabularMdp(n_states, n_actions, 1.0, std::move(transition), std::move(reward),
                    {false, false, true});
}

std::pair<ValueDistributionTable, ValueDistributionTable> noncontraction_tables(double epsilon) {
  const double bound = 2.0 + std::abs(epsilon);
  const DiscreteDistribution zero = DiscreteDistribution::point_mass(0.0);
  const DiscreteDistribution plus = make_discrete({-1.0 + epsilon, 1.0 + epsilon}, {0.5, 0.5});
  const DiscreteDistribution minus = make_discrete({-1.0 - epsilon, 1.0 - epsilon}, {0.5, 0.5});

  ValueDistributionTable z_star(3, 2, bound, zero);
  z_star.set(0, 0, plus);
  z_star.set(0, 1, plus);
  z_star.set(1, 1, plus);

  ValueDistributionTable z(3, 2, bound, zero);
  z.set(0, 0, plus);
  z.set(0, 1, plus);
  z.set(1, 1, minus);

  return {std::move(z), std::move(z_star)};
}

TieBreak oscillating_tie_break() {
  return [](int, const std::vector<int>& tied, const ValueDistributionTable* context) {
    if (context != nullptr && tied.size() > 1) {
      const DiscreteDistribution& head = context->at(0, 0);
      const bool head_is_zero = head.size() == 1 && head.atom(0) == 0.0;
      return head_is_zero ? tied.back() : tied.front();
    }
    return tied.front();
  };
}

TabularMdp build_nonstationary_mdp() {
  std::vector<std::vector<double>> transition(2, std::vector<double>{1.0});
  std::vector<DiscreteDistribution> reward;
  reward.push_back(DiscreteDistribution::point_mass(0.5));
  reward.push_back(make_discrete({0.0, 1.0}, {0.5, 0.5}));
  return TabularMdp(1, 2, 0.5, std::move(transition), std::move(reward), {false});
}

TabularMdp build_sample_wasserstein_mdp() {
  std::vector<std::vector<double>> transition{{0.0, 1.0}, {0.0, 1.0}};
  std::vector<DiscreteDistribution> reward;
  reward.push_back(make_discrete({0.0, 1.0}, {0.5, 0.5}));
  reward.push_back(DiscreteDistribution::point_mass(0.0));
  return TabularMdp(2, 1, 1.0, std::move(transition), std::move(reward), {false, true});
}

}  // namespace distbell
