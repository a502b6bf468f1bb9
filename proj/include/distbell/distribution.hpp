#pragma once

#include <span>
#include <vector>

#include "distbell/rng.hpp"

namespace distbell {

/// Absolute tolerance under which two atoms are coalesced into one.
inline constexpr double kDefaultMergeTol = 1e-12;

/// Tolerance on probability sums accepted at construction; sums inside the
/// band are renormalized exactly to 1 rather than rejected.
inline constexpr double kProbSumTol = 1e-9;

/// A finite real-valued probability law: strictly increasing atoms paired
/// with probabilities that sum to one. This is the universal representation
/// of a return distribution; exact Bellman operators, Monte-Carlo empirical
/// laws and metric computations all work on it.
///
/// Values are immutable once built; every transform returns a new value, so
/// instances can be shared freely across threads.
class DiscreteDistribution {
 public:
  static DiscreteDistribution point_mass(double value);

  const std::vector<double>& atoms() const { return atoms_; }
  const std::vector<double>& probs() const { return probs_; }
  int size() const { return static_cast<int>(atoms_.size()); }
  double atom(int i) const { return atoms_[static_cast<std::size_t>(i)]; }
  double prob(int i) const { return probs_[static_cast<std::size_t>(i)]; }
  double min_atom() const { return atoms_.front(); }
  double max_atom() const { return atoms_.back(); }

  double mean() const;
  double variance() const;

  /// Smallest atom whose cumulative probability reaches q; q must lie in
  /// (0, 1].
  double inverse_cdf(double q) const;

  /// P(X <= y).
  double cdf(double y) const;

  /// Draws one atom via the inverse c.d.f. of a single uniform variate.
  double sample(Rng& rng) const;

  friend DiscreteDistribution make_discrete(std::vector<double> atoms,
                                            std::vector<double> probs,
                                            double merge_tol);

 private:
  DiscreteDistribution(std::vector<double> atoms, std::vector<double> probs)
      : atoms_(std::move(atoms)), probs_(std::move(probs)) {}

  friend DiscreteDistribution scale_shift(const DiscreteDistribution&, double, double);

  std::vector<double> atoms_;
  std::vector<double> probs_;
};

/// Canonicalizing constructor: sorts atoms, coalesces atoms within merge_tol
/// of each other (summing probability onto the smaller atom value), drops
/// zero-mass atoms and renormalizes probabilities to sum exactly 1.
///
/// Throws std::invalid_argument on empty input, mismatched lengths, negative
/// probabilities, or an all-zero probability vector.
DiscreteDistribution make_discrete(std::vector<double> atoms, std::vector<double> probs,
                                   double merge_tol = kDefaultMergeTol);

/// Law of r + gamma * X. gamma = 0 collapses to a point mass at r, which is
/// how terminal transitions (discount zero) are realized.
DiscreteDistribution scale_shift(const DiscreteDistribution& d, double gamma, double r);

struct WeightedComponent {
  double weight;
  const DiscreteDistribution* dist;
};

/// Mixture law of the components; weights must be nonnegative and sum to 1
/// within kProbSumTol. Atoms are coalesced via make_discrete.
DiscreteDistribution mixture(std::span<const WeightedComponent> components,
                             double merge_tol = kDefaultMergeTol);
DiscreteDistribution mixture(const std::vector<std::pair<double, DiscreteDistribution>>& components,
                             double merge_tol = kDefaultMergeTol);

/// Evenly spaced fixed support: atom(i) = v_min + i * delta_z, with the
/// first and last atoms equal to v_min and v_max exactly.
class CategoricalSupport {
 public:
  CategoricalSupport(double v_min, double v_max, int n_atoms);

  double v_min() const { return v_min_; }
  double v_max() const { return v_max_; }
  int n_atoms() const { return n_atoms_; }
  double delta_z() const { return delta_z_; }

  double atom(int i) const {
    return i == n_atoms_ - 1 ? v_max_ : v_min_ + static_cast<double>(i) * delta_z_;
  }
  std::vector<double> atoms() const;
  double clamp(double y) const;

  bool operator==(const CategoricalSupport& other) const = default;

 private:
  double v_min_;
  double v_max_;
  int n_atoms_;
  double delta_z_;
};

/// A probability vector over a CategoricalSupport. Unlike
/// DiscreteDistribution, zero-probability atoms are kept: the support is part
/// of the parametrization.
class CategoricalDistribution {
 public:
  CategoricalDistribution(CategoricalSupport support, std::vector<double> probs);

  const CategoricalSupport& support() const { return support_; }
  const std::vector<double>& probs() const { return probs_; }
  double prob(int i) const { return probs_[static_cast<std::size_t>(i)]; }

  double mean() const;
  DiscreteDistribution to_discrete() const;

 private:
  CategoricalSupport support_;
  std::vector<double> probs_;
};

}  // namespace distbell
