#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "rwsre/limitlaw.hpp"
#include "rwsre/stats.hpp"

using namespace rwsre;

TEST_CASE("the two exit-time series agree across the crossover") {
  for (double t : {0.15, 0.25, 0.3, 0.35, 0.5}) {
    const double spectral = [t] {
      double s = 0.0;
      for (int k = 0; k < 200; ++k) {
        const double m = 2.0 * k + 1.0;
        s += (k % 2 == 0 ? 1.0 : -1.0) / m *
             std::exp(-m * m * 3.14159265358979323846 * 3.14159265358979323846 * t / 8.0);
      }
      return 4.0 / 3.14159265358979323846 * s;
    }();
    const double reflect = [t] {
      double hit = 0.0;
      for (int k = 0; k < 200; ++k)
        hit += (k % 2 == 0 ? 1.0 : -1.0) * 0.5 *
               std::erfc((2.0 * k + 1.0) / std::sqrt(t) / std::sqrt(2.0));
      return 1.0 - 4.0 * hit;
    }();
    CHECK(spectral == doctest::Approx(reflect).epsilon(1e-10));
    CHECK(bm_exit_survival(t) == doctest::Approx(spectral).epsilon(1e-10));
  }
  CHECK(bm_exit_survival(0.0) == 1.0);
  CHECK(bm_exit_survival(50.0) < 1e-20);
}

TEST_CASE("exit-time quantile inverts the cdf") {
  for (double u : {0.01, 0.25, 0.5, 0.9, 0.999}) {
    const double q = bm_exit_quantile(u);
    CHECK(1.0 - bm_exit_survival(q) == doctest::Approx(u).epsilon(1e-8));
  }
}

TEST_CASE("theta moments from quadrature: 1/2 and 5/12") {
  CHECK(ThetaSampler::moment(1.0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(ThetaSampler::moment(2.0) == doctest::Approx(5.0 / 12.0).epsilon(1e-6));
}

TEST_CASE("table draws match the exact quantile sampler") {
  Rng a(1), b(1);
  std::vector<double> table(50000), exact(50000);
  for (auto& v : table) v = ThetaSampler::draw(a);
  for (auto& v : exact) v = ThetaSampler::draw_series(b);
  CHECK(ks_distance(Ecdf(table), Ecdf(exact)) < 0.01);
}

TEST_CASE("theta laplace transform is 1/cosh sqrt(s)") {
  Rng rng(2);
  std::vector<double> th(300000);
  for (auto& v : th) v = sample_theta(rng);
  const double gap = laplace_gap(
      th, [](double s) { return 1.0 / std::cosh(std::sqrt(s)); }, {0.5, 1.0, 2.0, 4.0});
  CHECK(gap < 0.005);
}

TEST_CASE("srw-exit draws of theta agree with the series sampler") {
  Rng rng(3);
  std::vector<double> srw(20000), tab(100000);
  for (auto& v : srw) v = ThetaSampler::draw_srw(300, rng);
  for (auto& v : tab) v = ThetaSampler::draw(rng);
  CHECK(ks_distance(Ecdf(srw), Ecdf(tab)) < 0.015);
}

TEST_CASE("M(1) is twice theta") {
  Rng a(4), b(4);
  for (int i = 0; i < 100; ++i) CHECK(sample_M1(a) == doctest::Approx(2.0 * sample_theta(b)));
}

TEST_CASE("levy pair sampler invariants") {
  Rng rng(5);
  for (int i = 0; i < 2000; ++i) {
    const LevyPairDraw d = sample_levy_pair(0.5, 1.0, 1e-3, rng);
    CHECK(d.l1_left >= 0.0);
    CHECK(d.l1_left <= 1.0);
    CHECK(d.l2_left >= 0.0);
    CHECK(d.passage_time > 0.0);
    if (!d.drift_crossing) CHECK(d.l1_left + d.overshoot_jump > 1.0);
  }
  CHECK_THROWS(sample_levy_pair(1.2, 1.0, 1e-3, rng));
  CHECK_THROWS(sample_levy_pair(0.5, 1.0, 0.5, rng));
  CHECK_THROWS(sample_levy_pair(0.5, 0.1, 1e-3, rng));  // c_mu below E theta^{beta/2}
}

TEST_CASE("passage time of the first subordinator is Mittag-Leffler") {
  // With only the coupled component, L1 is the standard beta-stable
  // subordinator, so its level-1 passage time matches the inverse
  // subordinator marginal.
  Rng rng(6);
  LevyPairOptions opt;
  opt.disable_pure = true;
  std::vector<double> pass(40000), ml(40000);
  for (auto& v : pass) v = sample_levy_pair(0.5, 1.0, 1e-3, rng, opt).passage_time;
  for (auto& v : ml) v = inverse_subordinator_at_1(0.5, rng);
  CHECK(ks_distance(Ecdf(pass), Ecdf(ml)) < 0.015);
}

TEST_CASE("chi reduces to theta when the levy pair is degenerate") {
  Rng a(7), b(7);
  LevyPairOptions off;
  off.disable_coupled = true;
  off.disable_pure = true;
  for (int i = 0; i < 100; ++i)
    CHECK(sample_chi(0.5, 1.0, 1e-3, a, off) == doctest::Approx(sample_theta(b)));
}

TEST_CASE("chi tails: light without the pure component, index beta/2 with it") {
  // All coupled jumps before the level-1 crossing have u <= 1 and theta has
  // exponential moments, so with C_mu = E theta^{beta/2} (no pure component)
  // chi is light tailed. A positive pure-component weight contributes
  // unconstrained (beta/2)-stable second-coordinate jumps and makes chi heavy
  // with index beta/2.
  Rng rng(8);
  const double e_t = ThetaSampler::moment(0.25);
  std::vector<double> light(30000), heavy(30000);
  for (auto& v : light) {
    v = sample_chi(0.5, e_t, 1e-3, rng);
    CHECK(v > 0.0);
  }
  for (auto& v : heavy) v = sample_chi(0.5, e_t + 1.0, 1e-3, rng);
  const HillResult h = hill_estimator(heavy);
  CHECK(h.index == doctest::Approx(0.25).epsilon(0.2));
  // Light case: far smaller high quantiles than any index-1/4 tail.
  std::sort(light.begin(), light.end());
  CHECK(light[light.size() - light.size() / 1000] < 20.0);
}

TEST_CASE("independent-subordinator limit composes the two marginals") {
  Rng rng(9);
  std::vector<double> v(60000);
  for (auto& x : v) {
    x = sample_indep_limit(0.25, 0.75, 2.0, rng);
    CHECK(x > 0.0);
  }
  const HillResult h = hill_estimator(v);
  CHECK(h.index == doctest::Approx(0.25).epsilon(0.2));
  CHECK(sample_indep_limit(0.25, 0.75, 0.0, rng) == 0.0);
}

TEST_CASE("mu tail formula against the jump stream") {
  const double beta = 0.5;
  const double c_mu = ThetaSampler::moment(0.25);
  Rng rng(10);
  MuJumpStream stream(beta, c_mu, 1e-3, rng);
  const double horizon = 1500.0;
  int count = 0;
  for (;;) {
    const MuJumpStream::Jump j = stream.next();
    if (j.t > horizon) break;
    if (j.u > 1.0 || j.v > 1.0) ++count;
  }
  const double expect = horizon * mu_tail(beta, c_mu, 1.0, 1.0);
  CHECK(static_cast<double>(count) == doctest::Approx(expect).epsilon(0.1));
}

TEST_CASE("mu tail limits: marginal in each coordinate") {
  const double beta = 0.5;
  const double c_mu = 1.0;
  // x1 -> inf: only the second coordinate constraint remains.
  CHECK(mu_tail(beta, c_mu, 1e8, 2.0) ==
        doctest::Approx(c_mu * std::pow(2.0, -0.25)).epsilon(1e-3));
  // x2 -> inf: E min(x1^{-b}, 0) = 0, leaving x1^{-beta}.
  CHECK(mu_tail(beta, c_mu, 2.0, 1e12) ==
        doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-3));
}

TEST_CASE("L2-at-1 marginal is the configured stable subordinator at time 1") {
  Rng a(11), b(11);
  for (int i = 0; i < 100; ++i)
    CHECK(sample_L2_at_1(0.5, 2.0, a) ==
          doctest::Approx(subordinator_marginal(0.5, 2.0, 1.0, b)));
}
