#include "distbell/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "distbell/numeric.hpp"

namespace distbell {

namespace {

void normalize_in_place(std::vector<double>& probs) {
  NeumaierSum total;
  for (double p : probs) total.add(p);
  const double sum = total.value();
  if (!(sum > 0.0)) throw std::invalid_argument("probabilities sum to zero");
  // An already-normalized vector (compensated sum within a few ulp of 1) is
  // left untouched so that construction is exactly idempotent.
  if (std::abs(sum - 1.0) <= 1e-14) return;
  for (double& p : probs) p /= sum;
}

}  // namespace

DiscreteDistribution make_discrete(std::vector<double> atoms, std::vector<double> probs,
                                   double merge_tol) {
  if (atoms.empty()) throw std::invalid_argument("make_discrete: empty atom list");
  if (atoms.size() != probs.size())
    throw std::invalid_argument("make_discrete: atoms/probs length mismatch");
  if (merge_tol < 0.0) throw std::invalid_argument("make_discrete: negative merge_tol");
  for (double p : probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("make_discrete: negative probability");
  }

  std::vector<std::size_t> order(atoms.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return atoms[a] < atoms[b]; });

  // Coalesce runs of atoms within merge_tol of the group representative,
  // which is the smallest atom of the run.
  std::vector<double> out_atoms;
  std::vector<double> out_probs;
  out_atoms.reserve(atoms.size());
  out_probs.reserve(atoms.size());
  for (std::size_t k : order) {
    if (!out_atoms.empty() && atoms[k] - out_atoms.back() <= merge_tol) {
      out_probs.back() += probs[k];
    } else {
      out_atoms.push_back(atoms[k]);
      out_probs.push_back(probs[k]);
    }
  }

  // Drop zero-mass atoms so supports stay minimal.
  std::size_t w = 0;
  for (std::size_t i = 0; i < out_atoms.size(); ++i) {
    if (out_probs[i] > 0.0) {
      out_atoms[w] = out_atoms[i];
      out_probs[w] = out_probs[i];
      ++w;
    }
  }
  out_atoms.resize(w);
  out_probs.resize(w);
  if (out_atoms.empty()) throw std::invalid_argument("make_discrete: all probabilities zero");

  if (out_probs.size() == 1) {
    out_probs[0] = 1.0;
  } else {
    normalize_in_place(out_probs);
  }
  return DiscreteDistribution(std::move(out_atoms), std::move(out_probs));
}

DiscreteDistribution DiscreteDistribution::point_mass(double value) {
  return DiscreteDistribution({value}, {1.0});
}

double DiscreteDistribution::mean() const {
  NeumaierSum acc;
  for (std::size_t i = 0; i < atoms_.size(); ++i) acc.add(probs_[i] * atoms_[i]);
  return acc.value();
}

double DiscreteDistribution::variance() const {
  const double m = mean();
  NeumaierSum acc;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    const double d = atoms_[i] - m;
    acc.add(probs_[i] * d * d);
  }
  return acc.value();
}

double DiscreteDistribution::inverse_cdf(double q) const {
  if (!(q > 0.0 && q <= 1.0))
    throw std::invalid_argument("inverse_cdf: q must lie in (0, 1]");
  NeumaierSum acc;
  for (std::size_t i = 0; i + 1 < atoms_.size(); ++i) {
    acc.add(probs_[i]);
    if (acc.value() >= q) return atoms_[i];
  }
  return atoms_.back();
}

double DiscreteDistribution::cdf(double y) const {
  NeumaierSum acc;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    if (atoms_[i] > y) break;
    acc.add(probs_[i]);
  }
  return std::min(acc.value(), 1.0);
}

double DiscreteDistribution::sample(Rng& rng) const {
  return inverse_cdf(rng.uniform_open_closed());
}

DiscreteDistribution scale_shift(const DiscreteDistribution& d, double gamma, double r) {
  if (!(gamma >= 0.0)) throw std::invalid_argument("scale_shift: gamma must be >= 0");
  if (gamma == 0.0) return DiscreteDistribution::point_mass(r);

  std::vector<double> atoms(d.atoms().size());
  for (std::size_t i = 0; i < atoms.size(); ++i) atoms[i] = r + gamma * d.atom(static_cast<int>(i));
  // The affine map preserves strict ordering unless rounding collapses two
  // neighbours; fall back to the canonicalizing path in that case.
  for (std::size_t i = 0; i + 1 < atoms.size(); ++i) {
    if (!(atoms[i] < atoms[i + 1])) return make_discrete(std::move(atoms), d.probs(), 0.0);
  }
  return DiscreteDistribution(std::move(atoms), d.probs());
}

DiscreteDistribution mixture(std::span<const WeightedComponent> components, double merge_tol) {
  if (components.empty()) throw std::invalid_argument("mixture: empty component list");
  NeumaierSum wsum;
  std::size_t total_atoms = 0;
  for (const auto& c : components) {
    if (!(c.weight >= 0.0)) throw std::invalid_argument("mixture: negative weight");
    wsum.add(c.weight);
    total_atoms += static_cast<std::size_t>(c.dist->size());
  }
  if (std::abs(wsum.value() - 1.0) > kProbSumTol)
    throw std::invalid_argument("mixture: weights must sum to 1");

  std::vector<double> atoms;
  std::vector<double> probs;
  atoms.reserve(total_atoms);
  probs.reserve(total_atoms);
  for (const auto& c : components) {
    if (c.weight == 0.0) continue;
    for (int i = 0; i < c.dist->size(); ++i) {
      atoms.push_back(c.dist->atom(i));
      probs.push_back(c.weight * c.dist->prob(i));
    }
  }
  return make_discrete(std::move(atoms), std::move(probs), merge_tol);
}

DiscreteDistribution mixture(const std::vector<std::pair<double, DiscreteDistribution>>& components,
                             double merge_tol) {
  std::vector<WeightedComponent> view;
  view.reserve(components.size());
  for (const auto& [w, d] : components) view.push_back({w, &d});
  return mixture(std::span<const WeightedComponent>(view), merge_tol);
}

CategoricalSupport::CategoricalSupport(double v_min, double v_max, int n_atoms)
    : v_min_(v_min), v_max_(v_max), n_atoms_(n_atoms) {
  if (!(v_min < v_max)) throw std::invalid_argument("CategoricalSupport: v_min must be < v_max");
  if (n_atoms < 2) throw std::invalid_argument("CategoricalSupport: need at least 2 atoms");
  delta_z_ = (v_max - v_min) / static_cast<double>(n_atoms - 1);
}

std::vector<double> CategoricalSupport::atoms() const {
  std::vector<double> out(static_cast<std::size_t>(n_atoms_));
  for (int i = 0; i < n_atoms_; ++i) out[static_cast<std::size_t>(i)] = atom(i);
  return out;
}

double CategoricalSupport::clamp(double y) const {
  return std::min(std::max(y, v_min_), v_max_);
}

CategoricalDistribution::CategoricalDistribution(CategoricalSupport support,
                                                 std::vector<double> probs)
    : support_(support), probs_(std::move(probs)) {
  if (static_cast<int>(probs_.size()) != support_.n_atoms())
    throw std::invalid_argument("CategoricalDistribution: probs length != n_atoms");
  NeumaierSum total;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw std::invalid_argument("CategoricalDistribution: negative probability");
    total.add(p);
  }
  const double sum = total.value();
  if (std::abs(sum - 1.0) > kProbSumTol)
    throw std::invalid_argument("CategoricalDistribution: probabilities must sum to 1");
  if (std::abs(sum - 1.0) > 1e-14) {
    for (double& p : probs_) p /= sum;
  }
}

double CategoricalDistribution::mean() const {
  NeumaierSum acc;
  for (int i = 0; i < support_.n_atoms(); ++i)
    acc.add(probs_[static_cast<std::size_t>(i)] * support_.atom(i));
  return acc.value();
}

DiscreteDistribution CategoricalDistribution::to_discrete() const {
  return make_discrete(support_.atoms(), probs_, 0.0);
}

}  // namespace distbell
