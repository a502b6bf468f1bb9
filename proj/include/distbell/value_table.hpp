#pragma once

#include <vector>

#include "distbell/distribution.hpp"

namespace distbell {

/// Per-(state, action) table of real values (expected returns).
class QTable {
 public:
  QTable(int n_states, int n_actions, double fill = 0.0)
      : n_states_(n_states),
        n_actions_(n_actions),
        values_(static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions), fill) {}

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }

  double& at(int x, int a) { return values_[index(x, a)]; }
  double at(int x, int a) const { return values_[index(x, a)]; }

  /// Largest absolute entry difference; both tables must share a shape.
  double max_abs_diff(const QTable& other) const;

 private:
  std::size_t index(int x, int a) const {
    return static_cast<std::size_t>(x) * static_cast<std::size_t>(n_actions_) +
           static_cast<std::size_t>(a);
  }

  int n_states_;
  int n_actions_;
  std::vector<double> values_;
};

/// Map from (state, action) to a return distribution; the object the
/// distributional operators act on. Carries a declared bound B with every
/// atom guaranteed to lie in [-B, B], checked whenever an entry is written.
class ValueDistributionTable {
 public:
  ValueDistributionTable(int n_states, int n_actions, double bound,
                         const DiscreteDistribution& init = DiscreteDistribution::point_mass(0.0));

  int n_states() const { return n_states_; }
  int n_actions() const { return n_actions_; }
  int pair_count() const { return n_states_ * n_actions_; }
  double bound() const { return bound_; }

  const DiscreteDistribution& at(int x, int a) const { return entries_[index(x, a)]; }
  void set(int x, int a, DiscreteDistribution d);

  /// Raises the declared bound (never lowers it); operator outputs use the
  /// recursion B' = max|R| + gamma * B.
  void set_bound(double bound);

  QTable mean_table() const;

  bool same_shape(const ValueDistributionTable& other) const {
    return n_states_ == other.n_states_ && n_actions_ == other.n_actions_;
  }

 private:
  std::size_t index(int x, int a) const {
    return static_cast<std::size_t>(x) * static_cast<std::size_t>(n_actions_) +
           static_cast<std::size_t>(a);
  }

  int n_states_;
  int n_actions_;
  double bound_;
  std::vector<DiscreteDistribution> entries_;
};

}  // namespace distbell
