#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "distbell/bellman.hpp"
#include "distbell/environments.hpp"
#include "distbell/metrics.hpp"
#include "distbell/monte_carlo.hpp"
#include "support/oracles.hpp"

using namespace distbell;

namespace {

QTable random_qtable(Rng& rng, int n_states, int n_actions, double scale) {
  QTable q(n_states, n_actions);
  for (int x = 0; x < n_states; ++x)
    for (int a = 0; a < n_actions; ++a) q.at(x, a) = rng.uniform(-scale, scale);
  return q;
}

}  // namespace

TEST_CASE("expected operators reduce to the mean reward at gamma 0") {
  Rng rng(3);
  const TabularMdp mdp = testing::random_mdp(rng, 5, 3, 0.0);
  const PolicyTable pi = testing::random_policy(rng, mdp.n_states(), mdp.n_actions());
  const QTable q = random_qtable(rng, mdp.n_states(), mdp.n_actions(), 4.0);
  const QTable pe = expected_bellman_pe(q, mdp, pi);
  const QTable opt = expected_bellman_opt(q, mdp);
  for (int x = 0; x < mdp.n_states(); ++x) {
    for (int a = 0; a < mdp.n_actions(); ++a) {
      CHECK(pe.at(x, a) == doctest::Approx(mdp.reward(x, a).mean()).epsilon(1e-13));
      CHECK(opt.at(x, a) == doctest::Approx(mdp.reward(x, a).mean()).epsilon(1e-13));
    }
  }
}

TEST_CASE("two-state example: expected fixed point") {
  const TabularMdp mdp = build_noncontraction_mdp(0.1);

  // Pairs that lead straight to the sink map to the mean reward for any
  // input values at the live states.
  Rng rng(4);
  QTable q0 = random_qtable(rng, 3, 2, 5.0);
  q0.at(2, 0) = 0.0;
  q0.at(2, 1) = 0.0;
  const QTable one = expected_bellman_opt(q0, mdp);
  CHECK(one.at(1, 1) == doctest::Approx(0.1).epsilon(1e-13));
  CHECK(one.at(1, 0) == 0.0);

  QTable q(3, 2);
  for (int k = 0; k < 50; ++k) q = expected_bellman_opt(q, mdp);
  CHECK(q.at(0, 0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(q.at(0, 1) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(q.at(1, 0) == 0.0);
  CHECK(q.at(1, 1) == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("expected optimality operator is a sup-norm contraction") {
  Rng rng(5);
  for (int k = 0; k < 50; ++k) {
    const double gamma = (k % 3 == 0) ? 0.3 : (k % 3 == 1 ? 0.5 : 0.9);
    const TabularMdp mdp = testing::random_mdp(rng, 6, 3, gamma);
    const QTable q1 = random_qtable(rng, mdp.n_states(), mdp.n_actions(), 5.0);
    const QTable q2 = random_qtable(rng, mdp.n_states(), mdp.n_actions(), 5.0);
    const double before = q1.max_abs_diff(q2);
    const double after = expected_bellman_opt(q1, mdp).max_abs_diff(expected_bellman_opt(q2, mdp));
    CHECK(after <= gamma * before + 1e-9);
  }
}

TEST_CASE("distributional operator on terminal pairs returns the reward law") {
  const TabularMdp mdp = build_sample_wasserstein_mdp();
  ValueDistributionTable z0(2, 1, value_bound(mdp, 10));
  const PolicyTable pi = PolicyTable::uniform(2, 1);
  const auto z1 = dist_bellman_pe_exact(z0, mdp, pi);
  CHECK(z1.at(0, 0).atoms() == std::vector<double>{0.0, 1.0});
  CHECK(z1.at(0, 0).probs() == std::vector<double>{0.5, 0.5});
  CHECK(z1.at(1, 0).atoms() == std::vector<double>{0.0});
}

TEST_CASE("two-state example: evaluation under the risky action") {
  const TabularMdp mdp = build_noncontraction_mdp(0.1);
  const auto [z, z_star] = noncontraction_tables(0.1);
  const PolicyTable risky = PolicyTable::deterministic(3, 2, {0, 1, 0});
  const auto tz = dist_bellman_pe_exact(z_star, mdp, risky);
  CHECK(tz.at(0, 0).atoms() == std::vector<double>{-0.9, 1.1});
  CHECK(tz.at(0, 0).probs() == std::vector<double>{0.5, 0.5});
}

TEST_CASE("two -1 rewards chained at gamma 0.5 give a point mass at -1.5") {
  std::vector<std::vector<double>> transition{{0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}};
  std::vector<DiscreteDistribution> reward;
  reward.push_back(DiscreteDistribution::point_mass(-1.0));
  reward.push_back(DiscreteDistribution::point_mass(-1.0));
  reward.push_back(DiscreteDistribution::point_mass(0.0));
  const TabularMdp mdp(3, 1, 0.5, std::move(transition), std::move(reward), {false, false, true});
  const PolicyTable pi = PolicyTable::uniform(3, 1);

  ValueDistributionTable z(3, 1, value_bound(mdp));
  z = dist_bellman_pe_exact(z, mdp, pi);
  z = dist_bellman_pe_exact(z, mdp, pi);
  CHECK(z.at(0, 0).atoms() == std::vector<double>{-1.5});
  CHECK(z.at(0, 0).probs() == std::vector<double>{1.0});
}

TEST_CASE("optimality operator with one action equals policy evaluation") {
  Rng rng(6);
  const TabularMdp mdp = testing::random_mdp(rng, 5, 1, 0.5);
  const auto z = testing::random_table(rng, mdp.n_states(), 1, 5.0);
  const auto via_opt = dist_bellman_opt(z, mdp);
  const auto via_pe = dist_bellman_pe_exact(z, mdp, PolicyTable::uniform(mdp.n_states(), 1));
  CHECK(max_wasserstein(via_opt, via_pe, 1.0) == 0.0);
}

TEST_CASE("two-state example: the optimality operator expands distances") {
  const TabularMdp mdp = build_noncontraction_mdp(0.1);
  const auto [z, z_star] = noncontraction_tables(0.1);

  CHECK(std::abs(max_wasserstein(z, z_star, 1.0) - 0.2) <= 1e-12);

  const auto tz = dist_bellman_opt(z, mdp);
  const auto tz_star = dist_bellman_opt(z_star, mdp);

  // Greedy on Z picks the safe action at state 1, so TZ at state 0 is a
  // point mass at zero.
  CHECK(tz.at(0, 0).atoms() == std::vector<double>{0.0});
  CHECK(std::abs(max_wasserstein(tz, tz_star, 1.0) - 1.0) <= 1e-12);
}

TEST_CASE("adversarial tie-breaking cycles with period 2") {
  const TabularMdp mdp = build_noncontraction_mdp(0.0);
  const auto [z, z_star] = noncontraction_tables(0.0);

  const TableOperator op_adversarial = [&](const ValueDistributionTable& table) {
    return dist_bellman_opt(table, mdp, oscillating_tie_break());
  };
  IterateOptions opts;
  opts.tol = 1e-9;
  opts.max_iters = 10;
  const IterationReport bad = iterate(op_adversarial, z_star, opts);
  CHECK(!bad.converged);
  CHECK(bad.cycle_detected);
  CHECK(bad.cycle_period == 2);
  CHECK(bad.iterations <= 10);
  // The oscillation keeps the distance between consecutive iterates at 1.
  for (double delta : bad.deltas) CHECK(delta == doctest::Approx(1.0).epsilon(1e-12));

  const TableOperator op_default = [&](const ValueDistributionTable& table) {
    return dist_bellman_opt(table, mdp);
  };
  const IterationReport good = iterate(op_default, z_star, opts);
  CHECK(good.converged);
  CHECK(!good.cycle_detected);
}

TEST_CASE("iterate stops immediately at a fixed point") {
  const TabularMdp mdp = build_sample_wasserstein_mdp();
  const PolicyTable pi = PolicyTable::uniform(2, 1);
  ValueDistributionTable z(2, 1, value_bound(mdp, 10));
  z.set(0, 0, make_discrete({0.0, 1.0}, {0.5, 0.5}));

  const TableOperator op = [&](const ValueDistributionTable& table) {
    return dist_bellman_pe_exact(table, mdp, pi);
  };
  IterateOptions opts;
  opts.tol = 1e-9;
  const IterationReport report = iterate(op, z, opts);
  CHECK(report.converged);
  CHECK(report.iterations == 1);
  CHECK(report.deltas.front() <= 1e-12);
}

TEST_CASE("policy evaluation ratio estimates respect the discount") {
  // Deterministic dynamics and policy keep the exact supports from growing
  // across the long iteration.
  Rng rng(8);
  for (int k = 0; k < 10; ++k) {
    const TabularMdp mdp = testing::random_deterministic_mdp(rng, 5, 3, 0.5);
    std::vector<int> choice(static_cast<std::size_t>(mdp.n_states()));
    for (int& c : choice) c = rng.uniform_int(mdp.n_actions());
    const PolicyTable pi = PolicyTable::deterministic(mdp.n_states(), mdp.n_actions(), choice);
    const TableOperator op = [&](const ValueDistributionTable& table) {
      return dist_bellman_pe_exact(table, mdp, pi);
    };
    IterateOptions opts;
    opts.tol = 1e-5;
    opts.max_iters = 60;
    const IterationReport report = iterate(
        op, testing::random_table(rng, mdp.n_states(), mdp.n_actions(), value_bound(mdp)), opts);
    CHECK(report.converged);
    for (double ratio : report.ratios) CHECK(ratio <= 0.5 + 1e-9);
  }
}

TEST_CASE("policy evaluation contracts in d-bar for every p") {
  Rng rng(9);
  for (int k = 0; k < 40; ++k) {
    const double gamma = (k % 3 == 0) ? 0.3 : (k % 3 == 1 ? 0.5 : 0.9);
    const TabularMdp mdp = testing::random_mdp(rng, 6, 3, gamma);
    const PolicyTable pi = testing::random_policy(rng, mdp.n_states(), mdp.n_actions());
    const double bound = value_bound(mdp);
    const auto z1 = testing::random_table(rng, mdp.n_states(), mdp.n_actions(), bound);
    const auto z2 = testing::random_table(rng, mdp.n_states(), mdp.n_actions(), bound);
    const auto t1 = dist_bellman_pe_exact(z1, mdp, pi);
    const auto t2 = dist_bellman_pe_exact(z2, mdp, pi);
    for (double p : {1.0, 2.0, kInfP}) {
      CHECK(max_wasserstein(t1, t2, p) <= gamma * max_wasserstein(z1, z2, p) + 1e-9);
    }
  }
}

TEST_CASE("mean tables commute with the distributional operator") {
  Rng rng(10);
  for (int k = 0; k < 30; ++k) {
    const TabularMdp mdp = testing::random_mdp(rng, 5, 3, 0.7);
    const PolicyTable pi = testing::random_policy(rng, mdp.n_states(), mdp.n_actions());
    const auto z = testing::random_table(rng, mdp.n_states(), mdp.n_actions(), value_bound(mdp));
    const QTable via_dist = dist_bellman_pe_exact(z, mdp, pi).mean_table();
    const QTable via_expected = expected_bellman_pe(z.mean_table(), mdp, pi);
    CHECK(via_dist.max_abs_diff(via_expected) <= 1e-9);
  }
}

TEST_CASE("optimality operator means contract even where distributions expand") {
  // The expansion instance itself...
  const TabularMdp mdp = build_noncontraction_mdp(0.1);
  const auto [z, z_star] = noncontraction_tables(0.1);
  const double mean_before = z.mean_table().max_abs_diff(z_star.mean_table());
  const double mean_after =
      dist_bellman_opt(z, mdp).mean_table().max_abs_diff(dist_bellman_opt(z_star, mdp).mean_table());
  CHECK(max_wasserstein(dist_bellman_opt(z, mdp), dist_bellman_opt(z_star, mdp), 1.0) >
        max_wasserstein(z, z_star, 1.0));
  CHECK(mean_after <= 1.0 * mean_before + 1e-12);

  // ... and random instances.
  Rng rng(11);
  for (int k = 0; k < 30; ++k) {
    const double gamma = (k % 2 == 0) ? 0.5 : 0.9;
    const TabularMdp random = testing::random_mdp(rng, 5, 3, gamma);
    const double bound = value_bound(random);
    const auto z1 = testing::random_table(rng, random.n_states(), random.n_actions(), bound);
    const auto z2 = testing::random_table(rng, random.n_states(), random.n_actions(), bound);
    const double before = z1.mean_table().max_abs_diff(z2.mean_table());
    const double after = dist_bellman_opt(z1, random)
                             .mean_table()
                             .max_abs_diff(dist_bellman_opt(z2, random).mean_table());
    CHECK(after <= gamma * before + 1e-9);
  }
}

TEST_CASE("variance table and the variance contraction") {
  const auto [z, z_star] = noncontraction_tables(0.1);
  const QTable vs = variance_table(z_star);
  CHECK(vs.at(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(vs.at(1, 0) == 0.0);

  ValueDistributionTable points(2, 2, 3.0, DiscreteDistribution::point_mass(1.5));
  const QTable vp = variance_table(points);
  for (int x = 0; x < 2; ++x)
    for (int a = 0; a < 2; ++a) CHECK(vp.at(x, a) == 0.0);

  // The gamma^2 variance contraction concerns tables with a common mean
  // function: with differing means, the mixture over successors picks up a
  // variance-of-means term that the bound does not cover.
  Rng rng(12);
  for (int k = 0; k < 30; ++k) {
    const double gamma = (k % 2 == 0) ? 0.5 : 0.9;
    const TabularMdp mdp = testing::random_mdp(rng, 5, 3, gamma);
    const PolicyTable pi = testing::random_policy(rng, mdp.n_states(), mdp.n_actions());
    const double bound = value_bound(mdp);
    const auto z1 = testing::random_table(rng, mdp.n_states(), mdp.n_actions(), bound);
    const auto z2 = testing::random_table_with_means(rng, z1);
    const double before = variance_table(z1).max_abs_diff(variance_table(z2));
    const double after = variance_table(dist_bellman_pe_exact(z1, mdp, pi))
                             .max_abs_diff(variance_table(dist_bellman_pe_exact(z2, mdp, pi)));
    CHECK(after <= gamma * gamma * before + 1e-9);
  }
}

TEST_CASE("expected fixed point on the small cliff grid matches rollout means") {
  const CliffWalk cw = build_cliffwalk(4, 4);
  QTable q(cw.mdp.n_states(), cw.mdp.n_actions());
  for (int k = 0; k < 20000; ++k) {
    QTable next = expected_bellman_pe(q, cw.mdp, cw.safe_policy);
    const double delta = next.max_abs_diff(q);
    q = std::move(next);
    if (delta < 1e-12) break;
  }

  // Across 64 pairs the largest |z| of a healthy estimator sits near 3, so
  // the check allows the expected max-statistics while catching any real
  // bias.
  RolloutOptions opts;
  opts.n_rollouts = 20000;
  const auto mc = monte_carlo_table(cw.mdp, cw.safe_policy, opts, 31415);
  int beyond_three_se = 0;
  for (int x = 0; x < cw.mdp.n_states(); ++x) {
    for (int a = 0; a < cw.mdp.n_actions(); ++a) {
      const auto& d = mc.at(x, a);
      const double se = std::sqrt(d.variance() / opts.n_rollouts);
      const double gap = std::abs(q.at(x, a) - d.mean());
      if (gap > 3.0 * se + 1e-9) ++beyond_three_se;
      CHECK(gap <= 4.5 * se + 1e-9);
    }
  }
  CHECK(beyond_three_se <= 2);
}

TEST_CASE("support cap guard") {
  Rng rng(13);
  const TabularMdp mdp = testing::random_mdp(rng, 4, 2, 0.9);
  const auto z = testing::random_table(rng, mdp.n_states(), mdp.n_actions(), value_bound(mdp));
  DistBellmanOptions opts;
  opts.support_cap = 3;
  const PolicyTable pi = PolicyTable::uniform(mdp.n_states(), mdp.n_actions());
  CHECK_THROWS_AS(dist_bellman_pe_exact(z, mdp, pi, opts), std::runtime_error);
}

TEST_CASE("tail trimming keeps the law close and the support small") {
  Rng rng(14);
  const TabularMdp mdp = testing::random_mdp(rng, 4, 2, 0.9);
  const PolicyTable pi = testing::random_policy(rng, mdp.n_states(), mdp.n_actions());
  const auto z = testing::random_table(rng, mdp.n_states(), mdp.n_actions(), value_bound(mdp));

  const auto exact = dist_bellman_pe_exact(z, mdp, pi);
  DistBellmanOptions opts;
  opts.drop_tail_mass = 1e-6;
  const auto trimmed = dist_bellman_pe_exact(z, mdp, pi, opts);
  CHECK(max_wasserstein(exact, trimmed, 1.0) <= 1e-6 * 2.0 * value_bound(mdp) + 1e-12);
}

TEST_CASE("projected iteration stays on the support") {
  const TabularMdp mdp = build_sample_wasserstein_mdp();
  const PolicyTable pi = PolicyTable::uniform(2, 1);
  const CategoricalSupport support(0.0, 1.0, 5);
  const TableOperator op = [&](const ValueDistributionTable& table) {
    return dist_bellman_pe_exact(table, mdp, pi);
  };
  IterateOptions opts;
  opts.tol = 1e-9;
  opts.post_project = &support;
  const IterationReport report =
      iterate(op, ValueDistributionTable(2, 1, value_bound(mdp, 10)), opts);
  CHECK(report.converged);
  for (double atom : report.final_table.at(0, 0).atoms()) {
    bool on_grid = false;
    for (int i = 0; i < 5; ++i) on_grid = on_grid || atom == support.atom(i);
    CHECK(on_grid);
  }
}
