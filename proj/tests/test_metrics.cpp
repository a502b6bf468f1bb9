#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "distbell/distribution.hpp"
#include "distbell/metrics.hpp"
#include "distbell/value_table.hpp"
#include "support/oracles.hpp"

using namespace distbell;

namespace {

// Law of a * U, general a (negative allowed).
DiscreteDistribution scaled(const DiscreteDistribution& u, double a) {
  std::vector<double> atoms(u.atoms());
  for (double& v : atoms) v *= a;
  return make_discrete(std::move(atoms), u.probs(), 0.0);
}

// Law of A + U for independent discrete A.
DiscreteDistribution convolved(const DiscreteDistribution& a, const DiscreteDistribution& u) {
  std::vector<std::pair<double, DiscreteDistribution>> parts;
  for (int i = 0; i < a.size(); ++i) parts.emplace_back(a.prob(i), scale_shift(u, 1.0, a.atom(i)));
  return mixture(parts);
}

// Law of A * U for independent discrete A.
DiscreteDistribution product(const DiscreteDistribution& a, const DiscreteDistribution& u) {
  std::vector<std::pair<double, DiscreteDistribution>> parts;
  for (int i = 0; i < a.size(); ++i) parts.emplace_back(a.prob(i), scaled(u, a.atom(i)));
  return mixture(parts);
}

double lp_norm(const DiscreteDistribution& a, double p) {
  if (std::isinf(p)) return std::max(std::abs(a.min_atom()), std::abs(a.max_atom()));
  double acc = 0.0;
  for (int i = 0; i < a.size(); ++i) acc += a.prob(i) * std::pow(std::abs(a.atom(i)), p);
  return std::pow(acc, 1.0 / p);
}

}  // namespace

TEST_CASE("wasserstein between point masses is the distance") {
  const auto f = DiscreteDistribution::point_mass(-2.0);
  const auto g = DiscreteDistribution::point_mass(1.5);
  for (double p : {1.0, 1.5, 2.0, 7.0, kInfP}) {
    CHECK(wasserstein(f, g, p) == doctest::Approx(3.5).epsilon(1e-14));
  }
}

TEST_CASE("wasserstein rejects p below 1") {
  const auto f = DiscreteDistribution::point_mass(0.0);
  CHECK_THROWS_AS(wasserstein(f, f, 0.5), std::invalid_argument);
}

TEST_CASE("wasserstein on the two-state example pairs") {
  // Shifted two-atom laws at distance 2 * 0.1.
  const auto f = make_discrete({-1.1, 0.9}, {0.5, 0.5});
  const auto g = make_discrete({-0.9, 1.1}, {0.5, 0.5});
  CHECK(std::abs(wasserstein(f, g, 1.0) - 0.2) <= 1e-12);

  // Point mass at 0 against the +/-1 law around 0.1.
  const auto h = DiscreteDistribution::point_mass(0.0);
  CHECK(std::abs(wasserstein(h, g, 1.0) - 1.0) <= 1e-12);
}

TEST_CASE("wasserstein between Bernoulli laws is the probability gap") {
  for (double p : {0.0, 0.1, 0.35, 0.5, 0.8, 1.0}) {
    const auto f = p == 0.0   ? DiscreteDistribution::point_mass(1.0)
                   : p == 1.0 ? DiscreteDistribution::point_mass(0.0)
                              : make_discrete({0.0, 1.0}, {p, 1.0 - p});
    const auto g = make_discrete({0.0, 1.0}, {0.5, 0.5});
    CHECK(std::abs(wasserstein(f, g, 1.0) - std::abs(p - 0.5)) <= 1e-12);
  }
}

TEST_CASE("wasserstein matches the transport-LP oracle") {
  Rng rng(23);
  for (int k = 0; k < 500; ++k) {
    const auto f = testing::random_rational_distribution(rng);
    const auto g = testing::random_rational_distribution(rng);
    CHECK(std::abs(wasserstein(f, g, 1.0) - testing::transport_distance_nw(f, g, 1.0)) <= 1e-9);
  }
  for (int k = 0; k < 100; ++k) {
    const auto f = testing::random_rational_distribution(rng);
    const auto g = testing::random_rational_distribution(rng);
    CHECK(std::abs(wasserstein(f, g, 2.0) - testing::transport_distance_nw(f, g, 2.0)) <= 1e-9);
  }
}

TEST_CASE("metric axioms hold on random pairs") {
  Rng rng(29);
  for (int k = 0; k < 300; ++k) {
    const auto f = testing::random_distribution(rng);
    const auto g = testing::random_distribution(rng);
    const auto h = testing::random_distribution(rng);
    for (double p : {1.0, 2.0, kInfP}) {
      const double fg = wasserstein(f, g, p);
      CHECK(fg >= 0.0);
      CHECK(std::abs(fg - wasserstein(g, f, p)) <= 1e-12);
      CHECK(wasserstein(f, f, p) == 0.0);
      CHECK(fg <= wasserstein(f, h, p) + wasserstein(h, g, p) + 1e-9);
    }
  }
}

TEST_CASE("wasserstein is monotone in p") {
  Rng rng(31);
  for (int k = 0; k < 200; ++k) {
    const auto f = testing::random_distribution(rng);
    const auto g = testing::random_distribution(rng);
    const double d1 = wasserstein(f, g, 1.0);
    const double d2 = wasserstein(f, g, 2.0);
    const double dinf = wasserstein(f, g, kInfP);
    CHECK(d1 <= d2 + 1e-12);
    CHECK(d2 <= dinf + 1e-12);
  }
}

TEST_CASE("scaling property P1") {
  Rng rng(37);
  for (int k = 0; k < 200; ++k) {
    const auto u = testing::random_distribution(rng);
    const auto v = testing::random_distribution(rng);
    const double a = rng.uniform(-2.0, 2.0);
    for (double p : {1.0, 2.0, kInfP}) {
      const double lhs = a == 0.0 ? 0.0 : wasserstein(scaled(u, a), scaled(v, a), p);
      CHECK(lhs <= std::abs(a) * wasserstein(u, v, p) + 1e-9);
    }
  }
}

TEST_CASE("shift property P2") {
  Rng rng(41);
  for (int k = 0; k < 200; ++k) {
    const auto u = testing::random_distribution(rng);
    const auto v = testing::random_distribution(rng);
    const auto a = testing::random_distribution(rng, 3, -2.0, 2.0);
    for (double p : {1.0, 2.0, kInfP}) {
      CHECK(wasserstein(convolved(a, u), convolved(a, v), p) <= wasserstein(u, v, p) + 1e-9);
    }
  }
}

TEST_CASE("product property P3") {
  Rng rng(43);
  for (int k = 0; k < 200; ++k) {
    const auto u = testing::random_distribution(rng);
    const auto v = testing::random_distribution(rng);
    // Nonnegative multiplier, indicator laws included.
    const auto a = k % 3 == 0 ? make_discrete({0.0, 1.0}, {0.4, 0.6})
                              : testing::random_distribution(rng, 3, 0.0, 2.0);
    for (double p : {1.0, 2.0, kInfP}) {
      CHECK(wasserstein(product(a, u), product(a, v), p) <=
            lp_norm(a, p) * wasserstein(u, v, p) + 1e-9);
    }
  }
}

TEST_CASE("partition upper bound") {
  Rng rng(47);
  for (int k = 0; k < 200; ++k) {
    const int parts = 2 + rng.uniform_int(3);
    std::vector<double> w(static_cast<std::size_t>(parts));
    double sum = 0.0;
    for (double& x : w) {
      x = rng.uniform(0.05, 1.0);
      sum += x;
    }
    for (double& x : w) x /= sum;

    // U and V mix the same event weights with different conditional laws;
    // A_i U has law w_i * (U | A_i) + (1 - w_i) * delta_0.
    std::vector<std::pair<double, DiscreteDistribution>> u_parts;
    std::vector<std::pair<double, DiscreteDistribution>> v_parts;
    double rhs = 0.0;
    std::vector<std::pair<DiscreteDistribution, DiscreteDistribution>> conditionals;
    for (int i = 0; i < parts; ++i) {
      conditionals.emplace_back(testing::random_distribution(rng), testing::random_distribution(rng));
      u_parts.emplace_back(w[static_cast<std::size_t>(i)], conditionals.back().first);
      v_parts.emplace_back(w[static_cast<std::size_t>(i)], conditionals.back().second);
    }
    const auto u = mixture(u_parts);
    const auto v = mixture(v_parts);
    const double p = 1.0;
    for (int i = 0; i < parts; ++i) {
      const double wi = w[static_cast<std::size_t>(i)];
      const auto masked_u = mixture({{wi, conditionals[static_cast<std::size_t>(i)].first},
                                     {1.0 - wi, DiscreteDistribution::point_mass(0.0)}});
      const auto masked_v = mixture({{wi, conditionals[static_cast<std::size_t>(i)].second},
                                     {1.0 - wi, DiscreteDistribution::point_mass(0.0)}});
      rhs += wasserstein(masked_u, masked_v, p);
    }
    CHECK(wasserstein(u, v, p) <= rhs + 1e-9);
  }
}

TEST_CASE("max_wasserstein over tables") {
  const double bound = 5.0;
  ValueDistributionTable z1(2, 2, bound);
  ValueDistributionTable z2(2, 2, bound);
  CHECK(max_wasserstein(z1, z2, 1.0) == 0.0);

  z2.set(1, 0, DiscreteDistribution::point_mass(3.0));
  CHECK(max_wasserstein(z1, z2, 1.0) == doctest::Approx(3.0).epsilon(1e-14));

  ValueDistributionTable s1(1, 1, bound, make_discrete({-1.0, 1.0}, {0.5, 0.5}));
  ValueDistributionTable s2(1, 1, bound, DiscreteDistribution::point_mass(0.5));
  CHECK(max_wasserstein(s1, s2, 1.0) ==
        doctest::Approx(wasserstein(s1.at(0, 0), s2.at(0, 0), 1.0)).epsilon(1e-14));

  ValueDistributionTable wrong(1, 2, bound);
  CHECK_THROWS_AS(max_wasserstein(z1, wrong, 1.0), std::invalid_argument);
}

TEST_CASE("kolmogorov and total variation on simple pairs") {
  const auto f = DiscreteDistribution::point_mass(0.0);
  const auto g = DiscreteDistribution::point_mass(1.0);
  CHECK(kolmogorov(f, f) == 0.0);
  CHECK(total_variation(f, f) == 0.0);
  CHECK(kolmogorov(f, g) == 1.0);
  CHECK(total_variation(f, g) == 1.0);

  // Atom-level jitter below the grouping tolerance compares as equal.
  const auto close = DiscreteDistribution::point_mass(1.0 - 5e-13);
  CHECK(kolmogorov(close, g) == 0.0);
  CHECK(total_variation(close, g) == 0.0);
}

TEST_CASE("kolmogorov against a continuous uniform law") {
  CHECK(kolmogorov_to_uniform(DiscreteDistribution::point_mass(0.0), 0.0, 2.0) == 1.0);

  // A fine dyadic discretization of U[0,2] is close.
  const int n = 1 << 12;
  std::vector<double> atoms(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    atoms[static_cast<std::size_t>(i)] = 2.0 * (static_cast<double>(i) + 0.5) / n;
  const auto fine =
      make_discrete(std::move(atoms), std::vector<double>(static_cast<std::size_t>(n), 1.0 / n));
  CHECK(kolmogorov_to_uniform(fine, 0.0, 2.0) <= 1.0 / n + 1e-12);
}

TEST_CASE("cross entropy basics") {
  const CategoricalSupport s(0.0, 1.0, 2);
  const CategoricalDistribution m(s, {1.0, 0.0});
  const CategoricalDistribution p_uniform(s, {0.5, 0.5});
  CHECK(cross_entropy(m, p_uniform) == doctest::Approx(std::log(2.0)).epsilon(1e-14));

  // At model == target the cross entropy attains the target entropy.
  const CategoricalDistribution q(s, {0.25, 0.75});
  const double entropy = -(0.25 * std::log(0.25) + 0.75 * std::log(0.75));
  CHECK(cross_entropy(q, q) == doctest::Approx(entropy).epsilon(1e-14));

  // Zero model mass where the target has mass saturates to +infinity.
  CHECK(std::isinf(cross_entropy(m, CategoricalDistribution(s, {0.0, 1.0}))));
  // ... but zero target mass there is fine (0 log 0 = 0).
  CHECK(cross_entropy(m, m) == 0.0);

  const CategoricalSupport other(0.0, 2.0, 2);
  CHECK_THROWS_AS(cross_entropy(m, CategoricalDistribution(other, {0.5, 0.5})),
                  std::invalid_argument);
}
