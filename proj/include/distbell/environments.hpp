#pragma once

#include <utility>
#include <vector>

#include "distbell/mdp.hpp"

namespace distbell {

/// CliffWalk gridworld (Sutton & Barto dynamics). Rows are numbered from the
/// top; the start is the bottom-left corner, the goal the bottom-right, and
/// the cliff the bottom cells between them. Every move costs -1; a move into
/// the cliff costs -100 and teleports back to the start; the goal is
/// terminal. gamma = 1, episodic.
struct CliffWalk {
  TabularMdp mdp;
  /// Follows the safe path (up the left wall, right along the top row, down
  /// the goal column) with probability 0.9 and a uniformly random action
  /// with probability 0.1.
  PolicyTable safe_policy;
  int rows;
  int cols;
  int start_state;
  int goal_state;
  std::vector<int> safe_action;      // per state, the deterministic safe move
  std::vector<int> safe_path_states; // start -> goal, inclusive

  int state_index(int row, int col) const { return row * cols + col; }
  bool is_cliff(int row, int col) const {
    return row == rows - 1 && col > 0 && col < cols - 1;
  }
};

enum class CliffAction { up = 0, down = 1, left = 2, right = 3 };

CliffWalk build_cliffwalk(int rows = 4, int cols = 12);

/// Undiscounted two-state MDP on which the distributional optimality
/// operator expands distances: x0 has a single (duplicated) move to x1;
/// at x1, action 0 pays 0 and terminates while action 1 pays epsilon +/- 1
/// and terminates. State 2 is the terminal sink.
TabularMdp build_noncontraction_mdp(double epsilon);

/// The (Z, Z*) pair exhibiting the expansion: Z* is the fixed point, Z
/// differs from it only at (x1, action 1) where the payoff mean is flipped
/// to -epsilon.
std::pair<ValueDistributionTable, ValueDistributionTable> noncontraction_tables(double epsilon);

/// Tie rule under which the optimality operator on build_noncontraction_mdp
/// with epsilon = 0 has no fixed point: at the tied state it picks action 1
/// exactly when the current Z at state 0 is a point mass at 0, and action 0
/// otherwise.
TieBreak oscillating_tie_break();

/// Single self-looping state, gamma = 1/2: action 0 pays 1/2 always, action
/// 1 pays 0 or 1 with equal probability. Stationary and nonstationary
/// policies produce visibly different return laws here.
TabularMdp build_nonstationary_mdp();

/// One state, one action, terminal after a single step with reward 0 or 1
/// with equal probability. The smallest MDP on which the expected
/// per-sample Wasserstein loss is biased.
TabularMdp build_sample_wasserstein_mdp();

}  // namespace distbell
