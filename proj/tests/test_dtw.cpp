#include <cmath>
#include <vector>

#include "doctest.h"
#include "cowrite/dtw.hpp"
#include "cowrite/error.hpp"
#include "cowrite/random.hpp"
#include "oracles.hpp"

using namespace cowrite;
using dtw::Series;

namespace {

Series random_series(Rng& rng, std::size_t dims, std::size_t max_len) {
  const std::size_t len = 1 + rng.below(max_len);
  std::vector<double> v(len * dims);
  for (auto& x : v) x = rng.uniform(-2.0, 2.0);
  return Series(dims, v);
}

oracle::Frames frames(const Series& s) {
  oracle::Frames out;
  for (std::size_t t = 0; t < s.length(); ++t) out.emplace_back(s.frame(t).begin(), s.frame(t).end());
  return out;
}

}  // namespace

TEST_CASE("local cost is the squared Euclidean distance") {
  const std::vector<double> a{0.0, 0.0}, b{3.0, 4.0}, c{1.0};
  CHECK(dtw::local_cost(a, a) == 0.0);
  CHECK(dtw::local_cost(a, b) == 25.0);
  CHECK(dtw::local_cost(b, a) == 25.0);
  CHECK_THROWS_AS(dtw::local_cost(a, c), DimensionMismatch);
  const std::vector<double> bad{NAN, 0.0};
  CHECK_THROWS_AS(dtw::local_cost(bad, a), NonFiniteInput);
}

TEST_CASE("identical series have zero distance on the diagonal") {
  const Series x = Series::univariate({1.0, 3.0, -2.0, 5.0});
  const auto al = dtw::dtw_distance(x, x);
  CHECK(al.distance == 0.0);
  REQUIRE(al.path.steps.size() == 4);
  for (std::size_t t = 0; t < 4; ++t) CHECK(al.path.steps[t] == std::pair<std::size_t, std::size_t>{t, t});
}

TEST_CASE("worked example: [0,1,2] against [0,2]") {
  const auto al = dtw::dtw_distance(Series::univariate({0, 1, 2}), Series::univariate({0, 2}));
  CHECK(al.cost == 1.0);
  CHECK(al.distance == 1.0);
  CHECK(al.path.steps.front() == std::pair<std::size_t, std::size_t>{0, 0});
  CHECK(al.path.steps.back() == std::pair<std::size_t, std::size_t>{2, 1});
}

TEST_CASE("distance matches exhaustive path enumeration") {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t dims = trial % 2 == 0 ? 1 : 4;
    const Series x = random_series(rng, dims, 6), y = random_series(rng, dims, 6);
    const double expected = std::sqrt(oracle::dtw_exhaustive(frames(x), frames(y)));
    CHECK(dtw::dtw_distance(x, y).distance == doctest::Approx(expected).epsilon(1e-12));
    CHECK(std::sqrt(dtw::dtw_cost(x, y)) == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("property: distance is symmetric, non-negative and zero on itself") {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Series x = random_series(rng, 4, 12), y = random_series(rng, 4, 12);
    const double dxy = dtw::dtw_distance(x, y).distance;
    CHECK(dxy >= 0.0);
    CHECK(dxy == doctest::Approx(dtw::dtw_distance(y, x).distance).epsilon(1e-12));
    CHECK(dtw::dtw_distance(x, x).distance == 0.0);
  }
}

TEST_CASE("property: the warping path is valid and carries the distance") {
  Rng rng(13);
  for (int trial = 0; trial < 200; ++trial) {
    const Series x = random_series(rng, 2, 10), y = random_series(rng, 2, 10);
    const auto al = dtw::dtw_distance(x, y);
    const auto& st = al.path.steps;
    REQUIRE(!st.empty());
    CHECK(st.front() == std::pair<std::size_t, std::size_t>{0, 0});
    CHECK(st.back() == std::pair<std::size_t, std::size_t>{x.length() - 1, y.length() - 1});
    double cost = dtw::local_cost(x.frame(st[0].first), y.frame(st[0].second));
    for (std::size_t k = 1; k < st.size(); ++k) {
      const auto di = st[k].first - st[k - 1].first, dj = st[k].second - st[k - 1].second;
      CHECK(di <= 1);
      CHECK(dj <= 1);
      CHECK(di + dj >= 1);
      cost += dtw::local_cost(x.frame(st[k].first), y.frame(st[k].second));
    }
    CHECK(cost == doctest::Approx(al.cost).epsilon(1e-12));
  }
}

TEST_CASE("cost matrix follows the recurrence") {
  const Series x = Series::univariate({0, 2, 1}), y = Series::univariate({1, 1, 3, 0});
  const auto cm = dtw::cost_matrix(x, y);
  // c(i,j) = (x_i - y_j)^2; accumulated by hand.
  CHECK(cm.at(0, 0) == 1.0);
  CHECK(cm.at(0, 1) == 2.0);
  CHECK(cm.at(1, 0) == 2.0);
  CHECK(cm.at(1, 1) == 2.0);
  CHECK(cm.at(1, 2) == 3.0);
  CHECK(cm.at(2, 3) == 4.0);
  CHECK(dtw::dtw_cost(x, y) == cm.at(2, 3));
}

TEST_CASE("mismatched or empty inputs are rejected") {
  CHECK_THROWS_AS(dtw::dtw_distance(Series(2, {0, 0}), Series(3, {0, 0, 0})), DimensionMismatch);
  CHECK_THROWS_AS(dtw::dtw_distance(Series::univariate({}), Series::univariate({1})), NumericError);
  CHECK_THROWS_AS(dtw::dtw_distance(Series::univariate({INFINITY}), Series::univariate({1})), NonFiniteInput);
}

TEST_CASE("linear resampling keeps endpoints and interpolates") {
  const Series x = Series::univariate({0, 2});
  CHECK(dtw::resample_linear(x, 3) == Series::univariate({0, 1, 2}));
  CHECK(dtw::resample_linear(Series::univariate({0, 1, 2, 3}), 2) == Series::univariate({0, 3}));
  const Series y = Series::univariate({4, -1, 7});
  CHECK(dtw::resample_linear(y, 3) == y);
  CHECK(dtw::resample_linear(Series::univariate({5}), 4) == Series::univariate({5, 5, 5, 5}));
  CHECK_THROWS_AS(dtw::resample_linear(y, 1), NumericError);
}

TEST_CASE("repeat resampling stays at distance zero") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const Series x = random_series(rng, 4, 10);
    const Series r = dtw::resample_repeat(x, x.length() + rng.below(12));
    CHECK(dtw::dtw_distance(x, r).distance == 0.0);
  }
}

TEST_CASE("DBA of a single series is that series") {
  const Series s = Series::univariate({0, 3, 1, 4, 1, 5});
  const auto b = dtw::dba_barycenter(std::vector<Series>{s}, s.length(), 10, 0);
  CHECK(b.series == s);
  CHECK(b.inertia_history.back() == 0.0);
}

TEST_CASE("DBA of identical members recovers the member") {
  const Series s(2, {0, 1, 2, 3, 4, 5, 6, 7});
  const auto b = dtw::dba_barycenter(std::vector<Series>{s, s, s}, 4, 10, 3);
  CHECK(b.series == s);
  CHECK(b.inertia_history.back() == 0.0);
}

TEST_CASE("property: DBA inertia never increases") {
  Rng rng(19);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Series> members;
    for (int k = 0; k < 5; ++k) members.push_back(random_series(rng, 4, 12));
    const auto b = dtw::dba_barycenter(members, 8, 30, static_cast<std::uint64_t>(trial));
    REQUIRE(!b.inertia_history.empty());
    for (std::size_t i = 1; i < b.inertia_history.size(); ++i)
      CHECK(b.inertia_history[i] <= b.inertia_history[i - 1]);
    double total = 0.0;
    for (const auto& m : members) total += dtw::dtw_cost(b.series, m);
    CHECK(total == doctest::Approx(b.inertia_history.back()).epsilon(1e-9));
  }
}

TEST_CASE("DBA of no members is an error") {
  CHECK_THROWS_AS(dtw::dba_barycenter(std::vector<Series>{}, 4, 10, 0), EmptyMemberSet);
}

TEST_CASE("pairwise matrix is symmetric with a zero diagonal") {
  Rng rng(23);
  std::vector<Series> corpus;
  for (int k = 0; k < 6; ++k) corpus.push_back(random_series(rng, 4, 9));
  const auto serial = dtw::pairwise_distances(corpus, 1);
  const auto threaded = dtw::pairwise_distances(corpus, 3);
  CHECK(serial == threaded);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(serial[i * 6 + i] == 0.0);
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(serial[i * 6 + j] == serial[j * 6 + i]);
      CHECK(serial[i * 6 + j] == doctest::Approx(dtw::dtw_distance(corpus[i], corpus[j]).distance));
    }
  }
}
