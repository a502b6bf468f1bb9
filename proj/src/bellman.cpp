#include "distbell/bellman.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "distbell/learn.hpp"
#include "distbell/metrics.hpp"

namespace distbell {

QTable expected_bellman_pe(const QTable& q, const TabularMdp& mdp, const PolicyTable& policy) {
  std::vector<double> v(static_cast<std::size_t>(mdp.n_states()), 0.0);
  for (int y = 0; y < mdp.n_states(); ++y) {
    double acc = 0.0;
    for (int a = 0; a < mdp.n_actions(); ++a) acc += policy.prob(y, a) * q.at(y, a);
    v[static_cast<std::size_t>(y)] = acc;
  }
  QTable out(mdp.n_states(), mdp.n_actions());
  for (int x = 0; x < mdp.n_states(); ++x) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      double next = 0.0;
      if (!mdp.terminal(x)) {
        for (const auto& [y, p] : mdp.successors(x, a)) next += p * v[static_cast<std::size_t>(y)];
      }
      out.at(x, a) = mdp.reward(x, a).mean() + mdp.gamma() * next;
    }
  }
  return out;
}

QTable expected_bellman_opt(const QTable& q, const TabularMdp& mdp) {
  std::vector<double> v(static_cast<std::size_t>(mdp.n_states()), 0.0);
  for (int y = 0; y < mdp.n_states(); ++y) {
    double best = q.at(y, 0);
    for (int a = 1; a < mdp.n_actions(); ++a) best = std::max(best, q.at(y, a));
    v[static_cast<std::size_t>(y)] = best;
  }
  QTable out(mdp.n_states(), mdp.n_actions());
  for (int x = 0; x < mdp.n_states(); ++x) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      double next = 0.0;
      if (!mdp.terminal(x)) {
        for (const auto& [y, p] : mdp.successors(x, a)) next += p * v[static_cast<std::size_t>(y)];
      }
      out.at(x, a) = mdp.reward(x, a).mean() + mdp.gamma() * next;
    }
  }
  return out;
}

namespace {

// Drops extreme atoms while at most eps/2 mass is removed from each tail,
// then renormalizes. Keeps the law within eps in total variation.
DiscreteDistribution trim_tails(const DiscreteDistribution& d, double eps) {
  if (eps <= 0.0 || d.size() == 1) return d;
  const double side = eps / 2.0;
  int lo = 0;
  int hi = d.size() - 1;
  double dropped = 0.0;
  while (lo < hi && dropped + d.prob(lo) <= side) dropped += d.prob(lo++);
  dropped = 0.0;
  while (hi > lo && dropped + d.prob(hi) <= side) dropped += d.prob(hi--);
  if (lo == 0 && hi == d.size() - 1) return d;
  std::vector<double> atoms(d.atoms().begin() + lo, d.atoms().begin() + hi + 1);
  std::vector<double> probs(d.probs().begin() + lo, d.probs().begin() + hi + 1);
  return make_discrete(std::move(atoms), std::move(probs), 0.0);
}

}  // namespace

ValueDistributionTable dist_bellman_pe_exact(const ValueDistributionTable& z, const TabularMdp& mdp,
                                             const PolicyTable& policy,
                                             const DistBellmanOptions& opts) {
  if (z.n_states() != mdp.n_states() || z.n_actions() != mdp.n_actions())
    throw std::invalid_argument("dist_bellman_pe_exact: table/MDP shape mismatch");

  const double gamma = mdp.gamma();
  ValueDistributionTable out(mdp.n_states(), mdp.n_actions(),
                             mdp.max_abs_reward() + gamma * z.bound());

  std::vector<double> atoms;
  std::vector<double> probs;
  for (int x = 0; x < mdp.n_states(); ++x) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      const DiscreteDistribution& r = mdp.reward(x, a);
      if (mdp.terminal(x)) {
        out.set(x, a, r);
        continue;
      }

      std::size_t next_atoms = 0;
      for (const auto& [y, py] : mdp.successors(x, a)) {
        (void)py;
        for (int ap = 0; ap < mdp.n_actions(); ++ap) {
          if (policy.prob(y, ap) > 0.0)
            next_atoms += static_cast<std::size_t>(z.at(y, ap).size());
        }
      }
      const std::size_t predicted = static_cast<std::size_t>(r.size()) * next_atoms;
      if (predicted > opts.support_cap)
        throw std::runtime_error("dist_bellman_pe_exact: support would exceed cap (" +
                                 std::to_string(predicted) + " atoms)");

      atoms.clear();
      probs.clear();
      atoms.reserve(predicted);
      probs.reserve(predicted);
      for (int ri = 0; ri < r.size(); ++ri) {
        const double rv = r.atom(ri);
        const double rp = r.prob(ri);
        for (const auto& [y, py] : mdp.successors(x, a)) {
          for (int ap = 0; ap < mdp.n_actions(); ++ap) {
            const double pi = policy.prob(y, ap);
            if (pi == 0.0) continue;
            const double w = rp * py * pi;
            const DiscreteDistribution& zy = z.at(y, ap);
            for (int k = 0; k < zy.size(); ++k) {
              atoms.push_back(rv + gamma * zy.atom(k));
              probs.push_back(w * zy.prob(k));
            }
          }
        }
      }
      DiscreteDistribution mixed = make_discrete(atoms, probs, opts.merge_tol);
      out.set(x, a, trim_tails(mixed, opts.drop_tail_mass));
    }
  }
  return out;
}

ValueDistributionTable dist_bellman_opt(const ValueDistributionTable& z, const TabularMdp& mdp,
                                        const TieBreak& tie_break, const DistBellmanOptions& opts) {
  const PolicyTable greedy = greedy_policy(z.mean_table(), tie_break, &z);
  return dist_bellman_pe_exact(z, mdp, greedy, opts);
}

QTable variance_table(const ValueDistributionTable& z) {
  QTable out(z.n_states(), z.n_actions());
  for (int x = 0; x < z.n_states(); ++x)
    for (int a = 0; a < z.n_actions(); ++a) out.at(x, a) = z.at(x, a).variance();
  return out;
}

ValueDistributionTable project_table(const ValueDistributionTable& z,
                                     const CategoricalSupport& support) {
  ValueDistributionTable out(z.n_states(), z.n_actions(),
                             std::max(std::abs(support.v_min()), std::abs(support.v_max())));
  for (int x = 0; x < z.n_states(); ++x)
    for (int a = 0; a < z.n_actions(); ++a)
      out.set(x, a, project(support, z.at(x, a)).to_discrete());
  return out;
}

IterationReport iterate(const TableOperator& op, const ValueDistributionTable& z0,
                        const IterateOptions& opts) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("iterate: tol must be positive");

  ValueDistributionTable prev = z0;
  ValueDistributionTable prev2 = z0;
  IterationReport report{{}, {}, 0, false, false, 0, z0};
  for (int k = 1; k <= opts.max_iters; ++k) {
    ValueDistributionTable next = op(prev);
    if (opts.post_project != nullptr) next = project_table(next, *opts.post_project);

    const double delta = max_wasserstein(next, prev, opts.p);
    if (!report.deltas.empty()) {
      const double last = report.deltas.back();
      report.ratios.push_back(last > 0.0 ? delta / last : 0.0);
    }
    report.deltas.push_back(delta);
    report.iterations = k;

    if (delta < opts.tol) {
      report.converged = true;
      report.final_table = std::move(next);
      return report;
    }
    // Period-2 cycle: Z_k repeats Z_{k-2} while the iterate is still
    // moving. The gap must sit far below the current delta; geometric
    // convergence that alternates around the fixed point also brings
    // Z_{k-2} close, but only within a (1 - gamma)-ish factor of delta.
    if (k >= 2) {
      const double cycle_gap = max_wasserstein(next, prev2, opts.p);
      if (cycle_gap <= std::min(opts.tol, 1e-3 * delta)) {
        report.cycle_detected = true;
        report.cycle_period = 2;
        report.final_table = std::move(next);
        return report;
      }
    }
    prev2 = std::move(prev);
    prev = std::move(next);
  }
  report.final_table = std::move(prev);
  return report;
}

}  // namespace distbell
