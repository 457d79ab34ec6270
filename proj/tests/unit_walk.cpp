#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "rwsre/stats.hpp"
#include "rwsre/walk.hpp"

using namespace rwsre;

static ModelSpec biased(double xi, double lambda) {
  ModelSpec m;
  m.xi.family = XiFamily::Constant;
  m.xi.value = xi;
  m.lambda.family = LambdaFamily::Constant;
  m.lambda.value = lambda;
  return m;
}

TEST_CASE("path identity T_n = n + 2 * left steps, exact and blocked modes") {
  ModelSpec m = biased(3.0, 2.0 / 3.0);
  EnvBlock env(m, 1);
  Rng rng(4);
  for (bool exact : {true, false}) {
    WalkOptions opt;
    opt.exact_path = exact;
    for (int i = 0; i < 2000; ++i) {
      const WalkObservables o = run_walk(env, 40, rng, opt);
      REQUIRE(!o.capped);
      CHECK(o.t_n == 40 + 2 * o.left_steps);
    }
  }
}

TEST_CASE("blocked and exact modes agree in law") {
  ModelSpec m = biased(5.0, 0.7);
  EnvBlock env(m, 3);
  Rng rng(9);
  std::vector<double> te, tb;
  WalkOptions exact, fast;
  exact.exact_path = true;
  fast.exact_path = false;
  for (int i = 0; i < 20000; ++i) te.push_back(static_cast<double>(run_walk(env, 60, rng, exact).t_n));
  for (int i = 0; i < 20000; ++i) tb.push_back(static_cast<double>(run_walk(env, 60, rng, fast).t_n));
  CHECK(ks_distance(Ecdf(te), Ecdf(tb)) < 0.02);
}

TEST_CASE("checkpoint times are increasing and bounded by T_n") {
  ModelSpec m = biased(3.0, 0.75);
  EnvBlock env(m, 11);
  Rng rng(2);
  WalkOptions opt;
  opt.exact_path = false;
  opt.site_checkpoints = {8, 16, 32};
  for (int i = 0; i < 500; ++i) {
    const WalkObservables o = run_walk(env, 32, rng, opt);
    REQUIRE(!o.capped);
    CHECK(o.checkpoint_times[0] <= o.checkpoint_times[1]);
    CHECK(o.checkpoint_times[1] <= o.checkpoint_times[2]);
    CHECK(o.checkpoint_times[2] == o.t_n);
    CHECK(o.checkpoint_times[0] >= 8);
  }
}

TEST_CASE("step cap flags the replica") {
  ModelSpec m = biased(3.0, 0.5);
  EnvBlock env(m, 1);
  Rng rng(7);
  WalkOptions opt;
  opt.step_cap = 10;
  const WalkObservables o = run_walk(env, 1000, rng, opt);
  CHECK(o.capped);
  CHECK(o.t_n <= 10);
}

TEST_CASE("mean passage time matches the quenched formula on a drifted lattice") {
  // All sites biased with lambda = 0.75: E T_n = n / (2 lambda - 1) = 2n.
  ModelSpec m = biased(1.0, 0.75);
  EnvBlock env(m, 1);
  Rng rng(13);
  double s = 0.0;
  const int reps = 40000;
  for (int i = 0; i < reps; ++i) s += static_cast<double>(run_walk(env, 20, rng).t_n);
  CHECK(s / reps == doctest::Approx(40.0).epsilon(0.02));
}

TEST_CASE("run_walk_for_steps has the right drift") {
  ModelSpec m = biased(1.0, 0.75);
  EnvBlock env(m, 1);
  Rng rng(5);
  double s = 0.0;
  const int reps = 2000;
  for (int i = 0; i < reps; ++i) s += static_cast<double>(run_walk_for_steps(env, 1000, rng));
  CHECK(s / reps == doctest::Approx(500.0).epsilon(0.05));
}

TEST_CASE("reflected first passage: exact mean at m = 2 and positivity") {
  Rng rng(21);
  double s = 0.0;
  const int reps = 200000;
  for (int i = 0; i < reps; ++i) s += static_cast<double>(reflected_first_passage(2, rng));
  CHECK(s / reps == doctest::Approx(4.0).epsilon(0.01));
  CHECK(reflected_first_passage(0, rng) == 0);
  CHECK(reflected_first_passage(1, rng) == 1);
}

TEST_CASE("srw exit time: parity, support and small-m means") {
  Rng rng(31);
  CHECK(srw_exit_time(1, rng) == 1);
  double s = 0.0;
  const int reps = 100000;
  for (int i = 0; i < reps; ++i) {
    const std::uint64_t t = srw_exit_time(3, rng);
    CHECK(t >= 3);
    CHECK((t - 3) % 2 == 0);
    s += static_cast<double>(t);
  }
  CHECK(s / reps == doctest::Approx(9.0).epsilon(0.02));  // E tau = m^2
}

TEST_CASE("fair first passage agrees with single-step simulation in law") {
  Rng rng(41);
  std::vector<double> blocked, single;
  for (int i = 0; i < 20000; ++i)
    blocked.push_back(static_cast<double>(fair_first_passage(12, rng).t_n));
  for (int i = 0; i < 20000; ++i) {
    std::int64_t x = 0;
    std::uint64_t t = 0;
    while (x != 12) {
      x += rng.pm_step();
      ++t;
    }
    single.push_back(static_cast<double>(t));
  }
  CHECK(ks_distance(Ecdf(blocked), Ecdf(single)) < 0.02);
  // Identity also holds in blocked mode.
  for (int i = 0; i < 1000; ++i) {
    const WalkObservables o = fair_first_passage(25, rng);
    CHECK(o.t_n == 25 + 2 * o.left_steps);
  }
}

TEST_CASE("conditioned walk matches rejection sampling on a left-transient lattice") {
  // Every site biased left: lambda = 0.4 at xi = 1 spacing.
  ModelSpec m = biased(1.0, 0.4);
  EnvBlock env(m, 1);
  const ConditionedWalk cw(env, 6);
  Rng rng(8);
  std::vector<double> cond;
  for (int i = 0; i < 30000; ++i) cond.push_back(static_cast<double>(cw.run(rng).t_n));
  // Rejection: simulate plainly, discard paths that fall below -40.
  std::vector<double> rej;
  EnvBlock env2(m, 1);
  WalkOptions opt;
  opt.abort_below = -40;
  opt.step_cap = 1000000;
  while (rej.size() < 30000) {
    const WalkObservables o = run_walk(env2, 6, rng, opt);
    if (!o.capped) rej.push_back(static_cast<double>(o.t_n));
  }
  CHECK(ks_distance(Ecdf(cond), Ecdf(rej)) < 0.02);
}

TEST_CASE("trap chain tracks the last visited mark") {
  ModelSpec m = biased(3.0, 0.6);
  EnvBlock env(m, 1);
  const std::vector<std::int64_t> path = {0, 1, 2, 3, 2, 3, 4, 5, 6, 5};
  const std::vector<std::int64_t> chain = trap_chain(path, env);
  const std::vector<std::int64_t> want = {0, 0, 0, 1, 1, 1, 1, 1, 2, 2};
  CHECK(chain == want);
}
