#include "distbell/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "distbell/numeric.hpp"

namespace distbell {

double wasserstein(const DiscreteDistribution& f, const DiscreteDistribution& g, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("wasserstein: p must be >= 1");

  const std::vector<double> cf = cumulative_probabilities(f.probs());
  const std::vector<double> cg = cumulative_probabilities(g.probs());

  // Walk the merged breakpoint sets; on each segment both quantile functions
  // are constant. Breakpoints within snap of each other are treated as one:
  // two cumulative sums that agree mathematically can drift by an ulp, and
  // the resulting sliver segment would pair the wrong atoms (which the
  // max over pieces at p = infinity cannot absorb).
  constexpr double snap = 1e-12;
  std::size_t i = 0;
  std::size_t j = 0;
  double u_prev = 0.0;
  NeumaierSum integral;
  double max_gap = 0.0;
  while (i < cf.size() && j < cg.size()) {
    const double u = std::min(cf[i], cg[j]);
    const double seg = u - u_prev;
    if (seg > 0.0) {
      const double gap = std::abs(f.atom(static_cast<int>(i)) - g.atom(static_cast<int>(j)));
      if (std::isinf(p)) {
        max_gap = std::max(max_gap, gap);
      } else if (p == 1.0) {
        integral.add(seg * gap);
      } else if (p == 2.0) {
        integral.add(seg * gap * gap);
      } else {
        integral.add(seg * std::pow(gap, p));
      }
    }
    u_prev = u;
    while (i < cf.size() && cf[i] <= u + snap) ++i;
    while (j < cg.size() && cg[j] <= u + snap) ++j;
  }

  if (std::isinf(p)) return max_gap;
  const double total = std::max(integral.value(), 0.0);
  if (p == 1.0) return total;
  if (p == 2.0) return std::sqrt(total);
  return std::pow(total, 1.0 / p);
}

double max_wasserstein(const ValueDistributionTable& z1, const ValueDistributionTable& z2,
                       double p) {
  if (!z1.same_shape(z2))
    throw std::invalid_argument("max_wasserstein: tables index different (state, action) sets");
  double worst = 0.0;
  for (int x = 0; x < z1.n_states(); ++x) {
    for (int a = 0; a < z1.n_actions(); ++a) {
      worst = std::max(worst, wasserstein(z1.at(x, a), z2.at(x, a), p));
    }
  }
  return worst;
}

namespace {

// Visits the union of both atom sets in increasing order, grouping atoms
// within atom_tol of the group leader, and reports the cumulative
// probabilities (cf, cg) after each group.
template <typename Visitor>
void walk_merged_atoms(const DiscreteDistribution& f, const DiscreteDistribution& g,
                       double atom_tol, Visitor&& visit) {
  NeumaierSum cf;
  NeumaierSum cg;
  int i = 0;
  int j = 0;
  while (i < f.size() || j < g.size()) {
    const double y = (j >= g.size() || (i < f.size() && f.atom(i) <= g.atom(j))) ? f.atom(i)
                                                                                 : g.atom(j);
    while (i < f.size() && f.atom(i) - y <= atom_tol) cf.add(f.prob(i++));
    while (j < g.size() && g.atom(j) - y <= atom_tol) cg.add(g.prob(j++));
    visit(y, std::min(cf.value(), 1.0), std::min(cg.value(), 1.0));
  }
}

}  // namespace

double kolmogorov(const DiscreteDistribution& f, const DiscreteDistribution& g, double atom_tol) {
  double worst = 0.0;
  walk_merged_atoms(f, g, atom_tol, [&](double, double cf, double cg) {
    worst = std::max(worst, std::abs(cf - cg));
  });
  return worst;
}

double total_variation(const DiscreteDistribution& f, const DiscreteDistribution& g,
                       double atom_tol) {
  NeumaierSum acc;
  double prev_cf = 0.0;
  double prev_cg = 0.0;
  walk_merged_atoms(f, g, atom_tol, [&](double, double cf, double cg) {
    acc.add(std::abs((cf - prev_cf) - (cg - prev_cg)));
    prev_cf = cf;
    prev_cg = cg;
  });
  return 0.5 * acc.value();
}

double kolmogorov_to_uniform(const DiscreteDistribution& d, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("kolmogorov_to_uniform: need lo < hi");
  const auto uniform_cdf = [&](double y) {
    return std::min(std::max((y - lo) / (hi - lo), 0.0), 1.0);
  };
  // The step c.d.f. is constant between atoms while the uniform c.d.f. is
  // monotone, so the supremum is attained at an atom (from one side or the
  // other) or at the interval endpoints.
  double worst = std::abs(uniform_cdf(d.min_atom()));  // left limit at the first atom
  NeumaierSum cum;
  for (int i = 0; i < d.size(); ++i) {
    const double u = uniform_cdf(d.atom(i));
    worst = std::max(worst, std::abs(cum.value() - u));  // just below the atom
    cum.add(d.prob(i));
    worst = std::max(worst, std::abs(std::min(cum.value(), 1.0) - u));  // at the atom
  }
  worst = std::max(worst, 1.0 - uniform_cdf(d.max_atom()));
  return worst;
}

double cross_entropy(const CategoricalDistribution& target, const CategoricalDistribution& model) {
  if (!(target.support() == model.support()))
    throw std::invalid_argument("cross_entropy: distributions live on different supports");
  NeumaierSum acc;
  for (int i = 0; i < target.support().n_atoms(); ++i) {
    const double m = target.prob(i);
    if (m == 0.0) continue;
    const double p = model.prob(i);
    if (p == 0.0) return std::numeric_limits<double>::infinity();
    acc.add(-m * std::log(std::max(p, 1e-300)));
  }
  return acc.value();
}

}  // namespace distbell
