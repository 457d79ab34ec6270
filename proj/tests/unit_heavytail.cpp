#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "rwsre/heavytail.hpp"
#include "rwsre/stats.hpp"

using namespace rwsre;

static ModelSpec pareto_model(double beta) {
  ModelSpec m;
  m.xi.family = XiFamily::Pareto;
  m.xi.beta = beta;
  m.lambda.family = LambdaFamily::Constant;
  m.lambda.value = 2.0 / 3.0;
  return m;
}

TEST_CASE("log-log table reproduces power functions and their inverses") {
  const LogLogTable t(1.0, 1e6, 256, [](double x) { return 3.0 * std::pow(x, 1.7); });
  CHECK(t(100.0) == doctest::Approx(3.0 * std::pow(100.0, 1.7)).epsilon(1e-6));
  CHECK(t.inverse(3.0 * std::pow(500.0, 1.7)) == doctest::Approx(500.0).epsilon(1e-4));
  CHECK_THROWS(LogLogTable(1.0, 10.0, 8, [](double) { return -1.0; }));
}

TEST_CASE("normalizers for plain pareto beta = 1/2: a(t) = t^2, c2 = t at alpha = 1/4") {
  const NormalizerTable nt = build_normalizers(pareto_model(0.5), 0.25, 1.0, 1e6);
  for (double t : {10.0, 100.0, 1000.0}) {
    CHECK(nt.a(t) == doctest::Approx(t * t).epsilon(0.01));
    CHECK(nt.c2(t) == doctest::Approx(t).epsilon(0.01));
    CHECK(nt.c1(t) == doctest::Approx(t).epsilon(1e-12));
  }
  // lambda is the asymptotic inverse of P{xi > s}^{-1/alpha} = s^2.
  CHECK(nt.lambda_fn(100.0) == doctest::Approx(10.0).epsilon(0.01));
}

TEST_CASE("normalizers for beta = 1: a(t) = t, m(t) = 1 + log t, pi* near 1/pi") {
  const NormalizerTable nt = build_normalizers(pareto_model(1.0), 0.25, 1.0, 1e7);
  CHECK(nt.a(1000.0) == doctest::Approx(1000.0).epsilon(0.01));
  CHECK(nt.m(1000.0) == doctest::Approx(1.0 + std::log(1000.0)).epsilon(0.01));
  const double t = std::exp(10.0);
  CHECK(nt.pi_star(t) == doctest::Approx(1.0 / 10.0).epsilon(0.25));
  // de Bruijn identity: pi(t pi*(t)) * pi*(t) close to 1.
  for (double u : {1e3, 1e5, 1e6}) {
    const double defect = nt.pi(u * nt.pi_star(u)) * nt.pi_star(u);
    CHECK(defect == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("beta = 1 inverse tables w and kappa invert their defining maps") {
  const NormalizerTable nt = build_normalizers(pareto_model(1.0), 0.25, 1.0, 1e6);
  for (double s : {100.0, 1000.0, 10000.0}) {
    const double c1 = nt.c1(s);
    CHECK(nt.w_fn(c1 * c1) == doctest::Approx(s).epsilon(0.05));
    const double v = std::pow(s * nt.pi_star(s), 4.0);  // (s pi*(s))^{1/alpha}
    CHECK(nt.kappa(v) == doctest::Approx(s).epsilon(0.05));
  }
}

TEST_CASE("kanter draw has the exact stable laplace transform") {
  Rng rng(1);
  const int n = 400000;
  for (double beta : {0.5, 0.75}) {
    double m1 = 0.0, m2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double s = kanter_stable(beta, rng);
      m1 += std::exp(-s);
      m2 += std::exp(-2.0 * s);
    }
    CHECK(m1 / n == doctest::Approx(std::exp(-1.0)).epsilon(0.005));
    CHECK(m2 / n == doctest::Approx(std::exp(-std::pow(2.0, beta))).epsilon(0.005));
  }
}

TEST_CASE("kanter beta = 1/2 matches the explicit half-stable cdf at 1") {
  // S_{1/2} with E e^{-s S} = e^{-sqrt(s)} has P{S <= 1} = 2(1 - Phi(1/sqrt(2))).
  Rng rng(2);
  const int n = 400000;
  int below = 0;
  for (int i = 0; i < n; ++i)
    if (kanter_stable(0.5, rng) <= 1.0) ++below;
  const double target = 2.0 * 0.5 * std::erfc(1.0 / (std::sqrt(2.0) * std::sqrt(2.0)));
  CHECK(static_cast<double>(below) / n == doctest::Approx(target).epsilon(0.01));
}

TEST_CASE("subordinator marginal has the configured scale") {
  // Levy tail c x^{-beta}: at beta = 1/2, c = 1, t = 1 the scale is
  // (Gamma(1/2))^2 = pi times a standard Kanter draw.
  Rng a(3), b(3);
  for (int i = 0; i < 1000; ++i) {
    const double v = subordinator_marginal(0.5, 1.0, 1.0, a);
    const double k = kanter_stable(0.5, b);
    CHECK(v == doctest::Approx(3.14159265358979323846 * k).epsilon(1e-12));
  }
  CHECK(subordinator_marginal(0.5, 1.0, 0.0, a) == 0.0);
}

TEST_CASE("inverse subordinator at 1 has the Mittag-Leffler mean") {
  Rng rng(4);
  double s = 0.0;
  const int n = 400000;
  for (int i = 0; i < n; ++i) s += inverse_subordinator_at_1(0.5, rng);
  // E = 1 / (Gamma(1/2) Gamma(3/2)) = 2 / pi.
  CHECK(s / n == doctest::Approx(2.0 / 3.14159265358979323846).epsilon(0.01));
}
