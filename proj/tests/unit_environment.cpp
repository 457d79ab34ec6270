#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "rwsre/environment.hpp"

using namespace rwsre;

static ModelSpec xi3_lambda04() {
  ModelSpec m;
  m.xi.family = XiFamily::Constant;
  m.xi.value = 3.0;
  m.lambda.family = LambdaFamily::Constant;
  m.lambda.value = 0.4;
  return m;
}

static ModelSpec pareto_env() {
  ModelSpec m;
  m.xi.family = XiFamily::Pareto;
  m.xi.beta = 0.5;
  m.lambda.family = LambdaFamily::Beta;
  m.lambda.a = 2.0;
  m.lambda.b = 2.0;
  return m;
}

TEST_CASE("S is the two-sided prefix sum with S_0 = 0") {
  EnvBlock env(xi3_lambda04(), 1);
  CHECK(env.S(0) == 0);
  CHECK(env.S(1) == 3);
  CHECK(env.S(5) == 15);
  CHECK(env.S(-1) == -3);
  CHECK(env.S(-4) == -12);
  for (std::int64_t k = -5; k < 5; ++k) CHECK(env.S(k + 1) - env.S(k) == env.mark(k + 1).xi);
}

TEST_CASE("site 0 is marked and carries lambda_1") {
  EnvBlock env(pareto_env(), 7);
  CHECK(env.is_marked(0));
  CHECK(env.omega_at(0) == doctest::Approx(env.mark(1).lambda));
  CHECK(env.omega_at(env.S(2)) == doctest::Approx(env.mark(3).lambda));
  // Unmarked interior sites are fair.
  const std::int64_t s1 = env.S(1);
  if (s1 > 1) CHECK(env.omega_at(1) == 0.5);
}

TEST_CASE("lazy extension never changes realized marks; windows are order independent") {
  ModelSpec m = pareto_env();
  EnvBlock a(m, 99), b(m, 99);
  // a: extend far up first, then down; b: interleave the other way.
  (void)a.S(50);
  (void)a.S(-50);
  (void)b.S(-3);
  (void)b.S(7);
  (void)b.S(-50);
  (void)b.S(50);
  for (std::int64_t k = -50; k <= 50; ++k) {
    if (k == 0) continue;
    CHECK(a.mark(k).xi == b.mark(k).xi);
    CHECK(a.mark(k).lambda == doctest::Approx(b.mark(k).lambda));
  }
  const std::int64_t up = a.realized_up();
  (void)a.S(60);
  CHECK(a.realized_up() > up);
  for (std::int64_t k = 1; k <= 50; ++k) CHECK(a.mark(k).xi == b.mark(k).xi);
}

TEST_CASE("mark_index_at_or_below brackets every site") {
  EnvBlock env(pareto_env(), 5);
  for (std::int64_t site = -200; site <= 200; ++site) {
    const std::int64_t k = env.mark_index_at_or_below(site);
    CHECK(env.S(k) <= site);
    CHECK(env.S(k + 1) > site);
  }
}

TEST_CASE("nu counts the first mark strictly above t") {
  EnvBlock env(xi3_lambda04(), 1);
  CHECK(env.nu_of(0) == 1);
  CHECK(env.nu_of(2) == 1);
  CHECK(env.nu_of(3) == 2);
  CHECK(env.nu_of(7) == 3);
}

TEST_CASE("different seeds give different environments") {
  ModelSpec m = pareto_env();
  EnvBlock a(m, 1), b(m, 2);
  bool differ = false;
  for (std::int64_t k = 1; k <= 20 && !differ; ++k)
    differ = a.mark(k).xi != b.mark(k).xi || a.mark(k).lambda != b.mark(k).lambda;
  CHECK(differ);
}
