#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "distbell/distribution.hpp"
#include "distbell/metrics.hpp"
#include "support/oracles.hpp"

using namespace distbell;

TEST_CASE("make_discrete sorts atoms") {
  const auto d = make_discrete({1.0, 0.0}, {0.5, 0.5});
  CHECK(d.atoms() == std::vector<double>{0.0, 1.0});
  CHECK(d.probs() == std::vector<double>{0.5, 0.5});
}

TEST_CASE("make_discrete coalesces duplicate atoms") {
  const auto d = make_discrete({0.0, 0.0, 1.0}, {0.25, 0.25, 0.5}, 1e-12);
  CHECK(d.atoms() == std::vector<double>{0.0, 1.0});
  CHECK(d.probs() == std::vector<double>{0.5, 0.5});
}

TEST_CASE("make_discrete normalizes a point mass") {
  const auto d = make_discrete({2.0}, {3.0});
  CHECK(d.atoms() == std::vector<double>{2.0});
  CHECK(d.probs() == std::vector<double>{1.0});
}

TEST_CASE("make_discrete keeps the smaller atom of a merged pair") {
  const auto d = make_discrete({1.0, 1.0 + 5e-13}, {0.5, 0.5}, 1e-12);
  CHECK(d.size() == 1);
  CHECK(d.atom(0) == 1.0);
}

TEST_CASE("make_discrete rejects bad input") {
  CHECK_THROWS_AS(make_discrete({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(make_discrete({0.0, 1.0}, {0.5}), std::invalid_argument);
  CHECK_THROWS_AS(make_discrete({0.0}, {-0.1}), std::invalid_argument);
  CHECK_THROWS_AS(make_discrete({0.0, 1.0}, {0.0, 0.0}), std::invalid_argument);
}

TEST_CASE("make_discrete is idempotent") {
  Rng rng(7);
  for (int k = 0; k < 200; ++k) {
    const auto d = testing::random_distribution(rng);
    const auto again = make_discrete(d.atoms(), d.probs());
    CHECK(again.atoms() == d.atoms());
    CHECK(again.probs() == d.probs());
  }
}

TEST_CASE("inverse_cdf on a point mass") {
  const auto d = DiscreteDistribution::point_mass(5.0);
  CHECK(d.inverse_cdf(0.7) == 5.0);
}

TEST_CASE("inverse_cdf is the left-continuous generalized inverse") {
  const auto d = make_discrete({0.0, 1.0}, {0.5, 0.5});
  CHECK(d.inverse_cdf(0.5) == 0.0);
  CHECK(d.inverse_cdf(0.500001) == 1.0);

  const auto e = make_discrete({-1.0, 1.0}, {0.25, 0.75});
  CHECK(e.inverse_cdf(0.25) == -1.0);
}

TEST_CASE("inverse_cdf rejects q outside (0, 1]") {
  const auto d = DiscreteDistribution::point_mass(0.0);
  CHECK_THROWS_AS(d.inverse_cdf(0.0), std::invalid_argument);
  CHECK_THROWS_AS(d.inverse_cdf(1.0 + 1e-9), std::invalid_argument);
  CHECK_THROWS_AS(d.inverse_cdf(-0.2), std::invalid_argument);
}

TEST_CASE("inverse_cdf matches the cumulative-sum oracle") {
  Rng rng(11);
  for (int k = 0; k < 300; ++k) {
    const auto d = testing::random_distribution(rng);
    const double q = rng.uniform_open_closed();
    CHECK(d.inverse_cdf(q) == testing::inverse_cdf_by_cumsum(d.atoms(), d.probs(), q));
  }
}

TEST_CASE("scale_shift maps atoms affinely") {
  const auto d = scale_shift(DiscreteDistribution::point_mass(1.0), 0.5, 2.0);
  CHECK(d.atoms() == std::vector<double>{2.5});

  const auto e = scale_shift(make_discrete({-1.0, 1.0}, {0.5, 0.5}), 0.9, 0.1);
  CHECK(e.atom(0) == doctest::Approx(-0.8).epsilon(1e-14));
  CHECK(e.atom(1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(e.probs() == std::vector<double>{0.5, 0.5});
}

TEST_CASE("scale_shift with gamma 0 collapses to a point mass") {
  const auto d = scale_shift(make_discrete({0.0, 1.0}, {0.5, 0.5}), 0.0, 3.0);
  CHECK(d.atoms() == std::vector<double>{3.0});
  CHECK(d.probs() == std::vector<double>{1.0});
}

TEST_CASE("scale_shift identity and mean affinity") {
  Rng rng(13);
  for (int k = 0; k < 200; ++k) {
    const auto d = testing::random_distribution(rng);
    const auto same = scale_shift(d, 1.0, 0.0);
    CHECK(same.atoms() == d.atoms());
    CHECK(same.probs() == d.probs());

    const double gamma = rng.uniform(0.0, 1.5);
    const double r = rng.uniform(-3.0, 3.0);
    const auto mapped = scale_shift(d, gamma, r);
    CHECK(std::abs(mapped.mean() - (r + gamma * d.mean())) <= 1e-12);
  }
}

TEST_CASE("mixture of a single component is the identity") {
  const auto d = make_discrete({-2.0, 0.5}, {0.3, 0.7});
  const auto m = mixture({{1.0, d}});
  CHECK(m.atoms() == d.atoms());
  CHECK(m.probs() == d.probs());
}

TEST_CASE("mixture of two point masses") {
  const auto m = mixture({{0.5, DiscreteDistribution::point_mass(0.0)},
                          {0.5, DiscreteDistribution::point_mass(1.0)}});
  CHECK(m.atoms() == std::vector<double>{0.0, 1.0});
  CHECK(m.probs() == std::vector<double>{0.5, 0.5});
}

TEST_CASE("mixture coalesces coincident atoms") {
  const auto m = mixture({{0.3, DiscreteDistribution::point_mass(2.0)},
                          {0.7, DiscreteDistribution::point_mass(2.0)}});
  CHECK(m.atoms() == std::vector<double>{2.0});
  CHECK(m.probs() == std::vector<double>{1.0});
}

TEST_CASE("mixture rejects bad weights") {
  const auto d = DiscreteDistribution::point_mass(0.0);
  CHECK_THROWS_AS(mixture({{-0.5, d}, {1.5, d}}), std::invalid_argument);
  CHECK_THROWS_AS(mixture({{0.5, d}}), std::invalid_argument);
  CHECK_THROWS_AS(mixture(std::vector<std::pair<double, DiscreteDistribution>>{}),
                  std::invalid_argument);
}

TEST_CASE("mixture mean is the weighted mean") {
  Rng rng(17);
  for (int k = 0; k < 200; ++k) {
    const int parts = 2 + rng.uniform_int(3);
    std::vector<double> w(static_cast<std::size_t>(parts));
    double sum = 0.0;
    for (double& v : w) {
      v = rng.uniform(0.01, 1.0);
      sum += v;
    }
    for (double& v : w) v /= sum;

    std::vector<std::pair<double, DiscreteDistribution>> comps;
    double expected = 0.0;
    for (int i = 0; i < parts; ++i) {
      comps.emplace_back(w[static_cast<std::size_t>(i)], testing::random_distribution(rng));
      expected += w[static_cast<std::size_t>(i)] * comps.back().second.mean();
    }
    CHECK(std::abs(mixture(comps).mean() - expected) <= 1e-12);
  }
}

TEST_CASE("moments of small laws") {
  const auto d = make_discrete({-1.0, 1.0}, {0.5, 0.5});
  CHECK(d.mean() == 0.0);
  CHECK(d.variance() == 1.0);

  const auto p = DiscreteDistribution::point_mass(7.0);
  CHECK(p.mean() == 7.0);
  CHECK(p.variance() == 0.0);

  const auto e = make_discrete({0.0, 1.0}, {0.25, 0.75});
  CHECK(e.mean() == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(e.variance() == doctest::Approx(0.1875).epsilon(1e-14));
}

TEST_CASE("empirical law of many samples is close in Kolmogorov distance") {
  const auto d = make_discrete({-2.0, -0.5, 0.0, 1.5, 3.0}, {0.1, 0.2, 0.3, 0.25, 0.15});
  Rng rng(12345);
  const int n = 100000;
  std::vector<double> draws(static_cast<std::size_t>(n));
  for (double& v : draws) v = d.sample(rng);
  const auto empirical =
      make_discrete(std::move(draws), std::vector<double>(static_cast<std::size_t>(n), 1.0 / n));
  CHECK(kolmogorov(empirical, d) <= 0.01);
}

TEST_CASE("categorical support atoms are evenly spaced with exact endpoints") {
  const CategoricalSupport s(-100.0, -1.0, 51);
  CHECK(s.atom(0) == -100.0);
  CHECK(s.atom(50) == -1.0);
  CHECK(s.delta_z() == doctest::Approx((99.0) / 50.0).epsilon(1e-15));
  for (int i = 0; i + 1 < 51; ++i) {
    CHECK(s.atom(i + 1) - s.atom(i) == doctest::Approx(s.delta_z()).epsilon(1e-12));
  }
  CHECK_THROWS_AS(CategoricalSupport(0.0, 0.0, 3), std::invalid_argument);
  CHECK_THROWS_AS(CategoricalSupport(0.0, 1.0, 1), std::invalid_argument);
}

TEST_CASE("categorical distribution validates and renormalizes") {
  const CategoricalSupport s(0.0, 1.0, 2);
  CHECK_THROWS_AS(CategoricalDistribution(s, {0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(CategoricalDistribution(s, {1.2, -0.2}), std::invalid_argument);
  const CategoricalDistribution c(s, {0.25, 0.75});
  CHECK(c.mean() == doctest::Approx(0.75).epsilon(1e-15));
  const auto d = c.to_discrete();
  CHECK(d.atoms() == std::vector<double>{0.0, 1.0});
}
