#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "doctest.h"
#include "cowrite/error.hpp"
#include "cowrite/random.hpp"
#include "cowrite/stats.hpp"
#include "oracles.hpp"
#include "shapiro_reference.hpp"

using namespace cowrite;
using testing_support::frozen_sample;
using testing_support::kFrozen;

TEST_CASE("Shapiro-Wilk reproduces frozen reference values") {
  for (std::size_t s = 0; s < std::size(kFrozen); ++s) {
    const auto x = frozen_sample(s, kFrozen[s].n);
    const auto r = stats::shapiro_wilk(x);
    INFO("n = " << kFrozen[s].n);
    CHECK(std::abs(r.statistic - kFrozen[s].w) <= 1e-3);
    CHECK(std::abs(r.p_value - kFrozen[s].p) <= 1e-3);
    CHECK(r.n_a == kFrozen[s].n);
  }
}

TEST_CASE("Shapiro-Wilk on a normal grid and on its exponential") {
  std::vector<double> grid, skewed;
  for (int i = 0; i < 50; ++i) grid.push_back(stats::normal_quantile((i + 0.5) / 50.0));
  for (int i = 0; i < 100; ++i) skewed.push_back(std::exp(stats::normal_quantile((i + 0.5) / 100.0)));
  const auto g = stats::shapiro_wilk(grid);
  CHECK(g.statistic == doctest::Approx(0.99920357).epsilon(1e-4));
  CHECK(g.p_value > 0.5);
  const auto e = stats::shapiro_wilk(skewed);
  CHECK(e.statistic == doctest::Approx(0.67129943).epsilon(1e-4));
  CHECK(e.p_value < 0.01);
}

TEST_CASE("Shapiro-Wilk input checks") {
  CHECK_THROWS_AS(stats::shapiro_wilk(std::vector<double>{1.0, 2.0}), SampleTooSmall);
  CHECK_THROWS_AS(stats::shapiro_wilk(std::vector<double>(5001, 1.0)), SampleTooLarge);
  CHECK_THROWS_AS(stats::shapiro_wilk(std::vector<double>(10, 4.2)), ZeroVariance);
  CHECK_THROWS_AS(stats::shapiro_wilk(std::vector<double>{1.0, NAN, 3.0}), NonFiniteInput);
}

TEST_CASE("property: W is invariant to affine rescaling and order") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> x(3 + rng.below(60));
    for (auto& v : x) v = rng.normal();
    auto y = x;
    for (auto& v : y) v = 3.5 * v - 11.0;
    rng.shuffle(y);
    const auto a = stats::shapiro_wilk(x), b = stats::shapiro_wilk(y);
    CHECK(a.statistic == doctest::Approx(b.statistic).epsilon(1e-9));
    CHECK(a.p_value == doctest::Approx(b.p_value).epsilon(1e-6));
    CHECK(a.statistic <= 1.0);
    CHECK(a.p_value >= 0.0);
    CHECK(a.p_value <= 1.0);
  }
}

TEST_CASE("Mann-Whitney on fully separated pairs") {
  const std::vector<double> a{1, 2}, b{3, 4};
  const auto r = stats::mann_whitney_u(a, b);
  CHECK(r.statistic == 0.0);
  CHECK(r.exact);
  // Exact: P(U <= 0) = 1/6 for 2 + 2, two-sided 1/3.
  CHECK(r.p_value == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("Mann-Whitney of identical samples is not significant") {
  const std::vector<double> a{1, 2, 3, 4, 5, 6};
  const auto r = stats::mann_whitney_u(a, a);
  CHECK(r.p_value > 0.9);
  CHECK(r.stars == stats::Stars::None);
}

TEST_CASE("Mann-Whitney exact path agrees with brute-force enumeration (8 vs 8)") {
  Rng rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> pool(16);
    for (std::size_t i = 0; i < 16; ++i) pool[i] = static_cast<double>(i) + rng.uniform(0.0, 0.5);
    rng.shuffle(pool);
    const std::vector<double> a(pool.begin(), pool.begin() + 8), b(pool.begin() + 8, pool.end());
    const auto r = stats::mann_whitney_u(a, b);
    const double u = oracle::u_by_pairs(a, b);
    CHECK(r.exact);
    CHECK(r.statistic == u);
    CHECK(r.p_value == doctest::Approx(oracle::mw_exact_enumerated(8, 8, u)).epsilon(1e-12));
  }
}

TEST_CASE("Mann-Whitney matches frozen reference values") {
  // scipy.stats.mannwhitneyu, two-sided.
  const std::vector<double> a{1, 2, 2, 3, 5, 5, 5, 8, 9, 10, 11, 11};
  const std::vector<double> b{2, 4, 5, 6, 6, 7, 9, 12, 12, 13, 14, 15, 15, 16};
  const auto r = stats::mann_whitney_u(a, b);
  CHECK(!r.exact);
  CHECK(r.statistic == 43.0);
  CHECK(r.p_value == doctest::Approx(0.03662732511528545).epsilon(1e-9));

  std::vector<double> c, d;
  for (int i = 0; i < 10; ++i) c.push_back(0.5 * i);
  for (int i = 0; i < 9; ++i) d.push_back(0.5 * i + 1.7);
  const auto e = stats::mann_whitney_u(c, d);
  CHECK(e.statistic == 21.0);
  CHECK(!e.exact);  // 19 observations: normal path
  const std::vector<double> f{3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8, 9, 7, 9, 3, 2, 3, 8, 4};
  const std::vector<double> g{2, 7, 1, 8, 2, 8, 1, 8, 2, 8, 4, 5, 9, 0, 4, 5, 2, 3, 5, 3, 6, 0, 2, 8, 7};
  const auto h = stats::mann_whitney_u(f, g);
  CHECK(h.statistic == 277.5);
  CHECK(h.p_value == doctest::Approx(0.5344679616290646).epsilon(1e-9));
}

TEST_CASE("property: Mann-Whitney symmetry and rank invariance") {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(1 + rng.below(15)), b(1 + rng.below(15));
    for (auto& v : a) v = std::round(rng.uniform(0, 20));
    for (auto& v : b) v = std::round(rng.uniform(0, 20));
    const auto ab = stats::mann_whitney_u(a, b), ba = stats::mann_whitney_u(b, a);
    CHECK(ab.statistic + ba.statistic == doctest::Approx(static_cast<double>(a.size() * b.size())));
    CHECK(ab.statistic == oracle::u_by_pairs(a, b));
    CHECK(ab.p_value == doctest::Approx(ba.p_value).epsilon(1e-12));
    auto ta = a, tb = b;
    for (auto& v : ta) v = std::exp(0.3 * v) + 2.0;
    for (auto& v : tb) v = std::exp(0.3 * v) + 2.0;
    const auto t = stats::mann_whitney_u(ta, tb);
    CHECK(t.statistic == ab.statistic);
    CHECK(t.p_value == doctest::Approx(ab.p_value).epsilon(1e-12));
  }
}

TEST_CASE("Mann-Whitney rejects empty samples") {
  CHECK_THROWS_AS(stats::mann_whitney_u(std::vector<double>{}, std::vector<double>{1.0}), EmptySample);
}

TEST_CASE("significance stars") {
  CHECK(stats::stars_for(0.00005) == stats::Stars::Four);
  CHECK(stats::stars_for(0.0001) == stats::Stars::Four);
  CHECK(stats::stars_for(0.0005) == stats::Stars::Three);
  CHECK(stats::stars_for(0.005) == stats::Stars::Two);
  CHECK(stats::stars_for(0.05) == stats::Stars::One);
  CHECK(stats::stars_for(0.0501) == stats::Stars::None);
  CHECK(stats::to_string(stats::Stars::None) == "ns");
  CHECK(stats::to_string(stats::Stars::Three) == "***");
}

TEST_CASE("Holm adjustment") {
  const auto adj = stats::holm_adjust({0.01, 0.04, 0.03});
  REQUIRE(adj.size() == 3);
  CHECK(adj[0] == doctest::Approx(0.03));
  CHECK(adj[1] == doctest::Approx(0.06));
  CHECK(adj[2] == doctest::Approx(0.06));
  const auto capped = stats::holm_adjust({0.6, 0.7});
  CHECK(capped[0] == 1.0);
  CHECK(capped[1] == 1.0);
}

TEST_CASE("normal helpers are mutual inverses") {
  for (double p : {1e-10, 0.001, 0.025, 0.3, 0.5, 0.8, 0.975, 0.999999}) {
    CHECK(stats::normal_cdf(stats::normal_quantile(p)) == doctest::Approx(p).epsilon(1e-12));
  }
  CHECK(stats::normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
}

TEST_CASE("pairwise cluster grid") {
  cluster::ClusterModel model;
  model.k = 3;
  model.session_ids = {"a", "b", "c", "d", "e", "f", "g"};
  model.labels = {0, 0, 1, 1, 2, 2, 2};
  const std::map<std::string, double> values{{"a", 1}, {"b", 2}, {"c", 3}, {"d", 4}, {"e", 5}, {"f", 6}};
  const auto grid = stats::pairwise_cluster_tests(model, values);
  REQUIRE(grid.pairs.size() == 3);
  CHECK(grid.missing == 1);
  CHECK(grid.pairs[0].cluster_a == 0);
  CHECK(grid.pairs[0].cluster_b == 1);
  CHECK(grid.pairs[2].cluster_a == 1);
  CHECK(grid.pairs[2].cluster_b == 2);
  REQUIRE(grid.pairs[1].result.has_value());
  CHECK(grid.pairs[1].result->n_b == 2);
  CHECK(grid.pairs[1].result->statistic == 0.0);

  const std::map<std::string, double> constant{{"a", 7}, {"b", 7}, {"c", 7}, {"d", 7}, {"e", 7}, {"f", 7}, {"g", 7}};
  for (const auto& p : stats::pairwise_cluster_tests(model, constant).pairs) {
    REQUIRE(p.result.has_value());
    CHECK(p.result->stars == stats::Stars::None);
  }
}
