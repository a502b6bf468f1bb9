#include "distbell/value_table.hpp"

#include <cmath>
#include <stdexcept>

namespace distbell {

double QTable::max_abs_diff(const QTable& other) const {
  if (n_states_ != other.n_states_ || n_actions_ != other.n_actions_)
    throw std::invalid_argument("QTable: shape mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i)
    worst = std::max(worst, std::abs(values_[i] - other.values_[i]));
  return worst;
}

ValueDistributionTable::ValueDistributionTable(int n_states, int n_actions, double bound,
                                               const DiscreteDistribution& init)
    : n_states_(n_states), n_actions_(n_actions), bound_(bound) {
  if (n_states < 1 || n_actions < 1)
    throw std::invalid_argument("ValueDistributionTable: need at least one state and action");
  if (!(bound >= 0.0)) throw std::invalid_argument("ValueDistributionTable: negative bound");
  entries_.reserve(static_cast<std::size_t>(n_states) * static_cast<std::size_t>(n_actions));
  for (int k = 0; k < n_states * n_actions; ++k) entries_.push_back(init);
  if (std::abs(init.min_atom()) > bound_ || std::abs(init.max_atom()) > bound_)
    throw std::invalid_argument("ValueDistributionTable: init atoms exceed declared bound");
}

void ValueDistributionTable::set(int x, int a, DiscreteDistribution d) {
  if (std::abs(d.min_atom()) > bound_ || std::abs(d.max_atom()) > bound_)
    throw std::invalid_argument("ValueDistributionTable: atoms exceed declared bound");
  entries_[index(x, a)] = std::move(d);
}

void ValueDistributionTable::set_bound(double bound) {
  if (bound < bound_) throw std::invalid_argument("ValueDistributionTable: cannot lower bound");
  bound_ = bound;
}

QTable ValueDistributionTable::mean_table() const {
  QTable q(n_states_, n_actions_);
  for (int x = 0; x < n_states_; ++x)
    for (int a = 0; a < n_actions_; ++a) q.at(x, a) = at(x, a).mean();
  return q;
}

}  // namespace distbell
