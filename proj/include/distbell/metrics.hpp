#pragma once

#include <limits>

#include "distbell/distribution.hpp"
#include "distbell/value_table.hpp"

namespace distbell {

inline constexpr double kInfP = std::numeric_limits<double>::infinity();

/// p-Wasserstein distance between two finite discrete laws, computed exactly
/// from the inverse c.d.f. representation: the two cumulative-probability
/// breakpoint sets are merged and the piecewise-constant quantile difference
/// is integrated (maximized for p = infinity). p must be >= 1.
double wasserstein(const DiscreteDistribution& f, const DiscreteDistribution& g, double p = 1.0);

/// Maximal form: max over all (state, action) pairs of wasserstein.
double max_wasserstein(const ValueDistributionTable& z1, const ValueDistributionTable& z2,
                       double p = 1.0);

/// sup_y |F(y) - G(y)| over the merged atom set. Atoms within atom_tol of
/// each other are treated as the same evaluation point, so laws that differ
/// only by float-level atom jitter compare as equal.
double kolmogorov(const DiscreteDistribution& f, const DiscreteDistribution& g,
                  double atom_tol = kDefaultMergeTol);

/// Kolmogorov distance to the continuous uniform law on [lo, hi].
double kolmogorov_to_uniform(const DiscreteDistribution& d, double lo, double hi);

/// (1/2) sum |f - g| over the merged atom set, with the same atom_tol
/// grouping as kolmogorov.
double total_variation(const DiscreteDistribution& f, const DiscreteDistribution& g,
                       double atom_tol = kDefaultMergeTol);

/// -sum_i m_i log p_i over a shared support, with 0 log 0 = 0. Returns
/// +infinity when the model places exactly zero mass where the target does
/// not; log arguments are clamped at 1e-300 otherwise.
double cross_entropy(const CategoricalDistribution& target, const CategoricalDistribution& model);

}  // namespace distbell
