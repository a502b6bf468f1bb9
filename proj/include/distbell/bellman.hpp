#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "distbell/mdp.hpp"
#include "distbell/value_table.hpp"

namespace distbell {

/// Expected-value Bellman operator for policy evaluation:
/// q'(x,a) = E R(x,a) + gamma * sum_{x'} P(x'|x,a) sum_{a'} pi(a'|x') q(x',a').
/// Terminal states contribute only the reward term.
QTable expected_bellman_pe(const QTable& q, const TabularMdp& mdp, const PolicyTable& policy);

/// Expected-value optimality operator: as above with max over a'.
QTable expected_bellman_opt(const QTable& q, const TabularMdp& mdp);

struct DistBellmanOptions {
  double merge_tol = kDefaultMergeTol;
  /// Hard error when a single output support would exceed this many atoms
  /// before coalescing.
  std::size_t support_cap = 1'000'000;
  /// Total probability mass allowed to be trimmed from the two support
  /// tails after each application (0 disables trimming). Needed to keep
  /// gamma = 1 episodic iterations bounded; the law changes by at most this
  /// mass per application.
  double drop_tail_mass = 0.0;
};

/// Exact distributional Bellman operator for policy evaluation: for each
/// (x, a), the mixture over reward atoms r, successors x' and actions a' of
/// the laws r + gamma * Z(x', a'), with reward, transition and next-pair
/// randomness independent. Terminal states produce the reward law alone.
ValueDistributionTable dist_bellman_pe_exact(const ValueDistributionTable& z, const TabularMdp& mdp,
                                             const PolicyTable& policy,
                                             const DistBellmanOptions& opts = {});

/// Distributional optimality operator: greedy policy extracted from the
/// per-pair means of z (ties resolved by tie_break, which may inspect z),
/// then dist_bellman_pe_exact under that policy.
ValueDistributionTable dist_bellman_opt(const ValueDistributionTable& z, const TabularMdp& mdp,
                                        const TieBreak& tie_break = lowest_index_tie_break(),
                                        const DistBellmanOptions& opts = {});

/// Per-pair variance of the table entries.
QTable variance_table(const ValueDistributionTable& z);

/// Every entry projected onto the fixed support (bounded-memory iteration).
ValueDistributionTable project_table(const ValueDistributionTable& z,
                                     const CategoricalSupport& support);

struct IterationReport {
  std::vector<double> deltas;  // d-bar_p(Z_{k}, Z_{k-1}) per iteration
  std::vector<double> ratios;  // successive delta quotients (one fewer)
  int iterations = 0;
  bool converged = false;
  bool cycle_detected = false;
  int cycle_period = 0;
  ValueDistributionTable final_table;
};

struct IterateOptions {
  double p = 1.0;
  double tol = 1e-9;
  int max_iters = 1000;
  /// Optional projection applied after every operator application.
  const CategoricalSupport* post_project = nullptr;
};

using TableOperator = std::function<ValueDistributionTable(const ValueDistributionTable&)>;

/// Applies op until d-bar_p between successive tables falls below tol, the
/// iteration budget runs out, or a period-2 cycle is detected (Z_k within
/// tol of Z_{k-2} while still moving). Non-convergence is reported through
/// the flags, not an exception.
IterationReport iterate(const TableOperator& op, const ValueDistributionTable& z0,
                        const IterateOptions& opts);

}  // namespace distbell
