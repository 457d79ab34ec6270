#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "rwsre/rng.hpp"
#include "rwsre/stats.hpp"

using namespace rwsre;

TEST_CASE("ecdf is right-continuous with the correct jumps") {
  const Ecdf f({3.0, 1.0, 2.0, 2.0});
  CHECK(f(0.5) == 0.0);
  CHECK(f(1.0) == 0.25);
  CHECK(f(1.5) == 0.25);
  CHECK(f(2.0) == 0.75);
  CHECK(f(3.0) == 1.0);
  CHECK_THROWS(Ecdf(std::vector<double>{}));
}

TEST_CASE("two-sample KS on hand-computable samples") {
  // {1,2}: F jumps to .5 at 1, 1 at 2; {2,3}: .5 at 2, 1 at 3.
  CHECK(ks_distance(Ecdf({1.0, 2.0}), Ecdf({2.0, 3.0})) == doctest::Approx(0.5));
  CHECK(ks_distance(Ecdf({1.0, 2.0, 3.0}), Ecdf({1.0, 2.0, 3.0})) == doctest::Approx(0.0));
  CHECK(ks_distance(Ecdf({1.0}), Ecdf({2.0})) == doctest::Approx(1.0));
}

TEST_CASE("one-sample KS against a continuous cdf") {
  const Ecdf f({0.25, 0.75});
  // Uniform cdf on [0,1]: gaps are |0.5-0.25| at 0.25-, |1-0.75|=0.25 at 0.75.
  CHECK(ks_distance(f, [](double x) { return x; }) == doctest::Approx(0.25));
}

TEST_CASE("two-sample KS is small for same-law samples, large otherwise") {
  Rng r(1);
  std::vector<double> a(20000), b(20000), c(20000);
  for (auto& v : a) v = r.normal();
  for (auto& v : b) v = r.normal();
  for (auto& v : c) v = r.normal() + 1.0;
  CHECK(ks_distance(Ecdf(a), Ecdf(b)) < 0.02);
  CHECK(ks_distance(Ecdf(a), Ecdf(c)) > 0.3);
}

TEST_CASE("hill estimator recovers a known pareto index with covering CI") {
  Rng r(2);
  for (double idx : {0.5, 2.0}) {
    std::vector<double> x(50000);
    for (auto& v : x) v = std::pow(r.uniform(), -1.0 / idx);
    const HillResult h = hill_estimator(x);
    CHECK(h.index == doctest::Approx(idx).epsilon(0.08));
    CHECK(h.ci_low < idx * 1.1);
    CHECK(h.ci_high > idx * 0.9);
    CHECK(h.ci_low < h.index);
    CHECK(h.index < h.ci_high);
  }
}

TEST_CASE("hill estimator input validation") {
  CHECK_THROWS(hill_estimator({1.0, 2.0, 3.0}));            // too small
  std::vector<double> with_neg(100, 1.0);
  with_neg[7] = -2.0;
  CHECK_THROWS(hill_estimator(with_neg));                   // nonpositive
  CHECK_THROWS(hill_estimator(std::vector<double>(100, 3.0)));  // degenerate
  std::vector<double> ok(100);
  Rng r(3);
  for (auto& v : ok) v = std::pow(r.uniform(), -2.0);
  CHECK_THROWS(hill_estimator(ok, 60));                     // k >= n/2
}

TEST_CASE("ratio tail estimate finds an exact plateau for pure pareto") {
  Rng r(4);
  std::vector<double> x(200000);
  for (auto& v : x) v = 3.0 * std::pow(r.uniform(), -1.0 / 0.5);  // tail 3^{0.5} t^{-0.5} ... scaled
  const double c_true = std::sqrt(3.0);
  const RatioTailResult res = ratio_tail_estimate(
      x, [](double t) { return std::pow(t, -0.5); }, {50.0, 100.0, 200.0, 400.0});
  CHECK(!res.insufficient);
  CHECK(res.plateau == doctest::Approx(c_true).epsilon(0.05));
  CHECK(res.flatness < 0.1);
  CHECK(res.points.size() == 4);
}

TEST_CASE("ratio tail estimate flags insufficient exceedances") {
  std::vector<double> x(1000, 1.0);
  const RatioTailResult res =
      ratio_tail_estimate(x, [](double t) { return std::pow(t, -1.0); }, {100.0});
  CHECK(res.insufficient);
}

TEST_CASE("laplace gap vanishes for an exponential sample against its transform") {
  Rng r(5);
  std::vector<double> x(200000);
  for (auto& v : x) v = r.exponential();
  const double gap = laplace_gap(
      x, [](double s) { return 1.0 / (1.0 + s); }, {0.5, 1.0, 2.0, 4.0});
  CHECK(gap < 0.005);
}

TEST_CASE("mean and moment helpers") {
  CHECK(sample_mean({1.0, 2.0, 3.0}) == doctest::Approx(2.0));
  CHECK(sample_moment({1.0, 2.0, 3.0}, 2.0) == doctest::Approx(14.0 / 3.0));
}
