#pragma once

// Direct quenched simulation of the walk X: first-passage times T_n, the
// trap chain, and the reflected SRW first passage T'_n.
//
// Two stepping modes. Exact mode advances one site per step and keeps
// min_site / steps_below_zero exact. Fast mode additionally takes
// "blocks": from an unmarked site at distance d from every relevant
// boundary, j = d-1 symmetric steps cannot reach any boundary, so the
// endpoint is exactly 2*Binomial(j,1/2) - j and the left-step count in
// the block is exactly j - Binomial. Since the no-hit event has
// probability one, the block preserves the path law of (T_n, left
// steps); min_site and steps_below_zero become conservative diagnostics.

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "rwsre/environment.hpp"
#include "rwsre/rng.hpp"

namespace rwsre {

struct WalkOptions {
  std::uint64_t step_cap = 1'000'000'000;
  std::int64_t abort_below = std::numeric_limits<std::int64_t>::min();
  bool exact_path = true;
  std::vector<std::int64_t> site_checkpoints;  // sorted ascending, in (0, n]
};

struct WalkObservables {
  std::uint64_t t_n = 0;
  bool capped = false;
  std::uint64_t left_steps = 0;
  std::int64_t min_site = 0;
  std::uint64_t steps_below_zero = 0;
  std::vector<std::uint64_t> checkpoint_times;
};

inline WalkObservables run_walk(EnvBlock& env, std::int64_t n, Rng& rng,
                                const WalkOptions& opt = {}) {
  WalkObservables obs;
  obs.checkpoint_times.assign(opt.site_checkpoints.size(), 0);
  std::size_t next_cp = 0;
  std::int64_t x = 0;
  // Gap bracket: lm = largest marked site <= x, rm = next marked site > x.
  std::int64_t k_left = env.mark_index_at_or_below(0);
  std::int64_t lm = env.S(k_left);
  std::int64_t rm = env.S(k_left + 1);
  std::uint64_t steps = 0;

  auto arrive = [&](std::int64_t site) {
    while (next_cp < opt.site_checkpoints.size() && site == opt.site_checkpoints[next_cp]) {
      obs.checkpoint_times[next_cp] = steps;
      ++next_cp;
    }
  };

  while (x != n) {
    if (steps >= opt.step_cap || x < opt.abort_below) {
      obs.capped = true;
      break;
    }
    if (!opt.exact_path && x != lm) {
      std::int64_t d = std::min(rm - x, x - lm);
      d = std::min(d, n > x ? n - x : d);
      const std::uint64_t cap_room = opt.step_cap - steps;
      if (next_cp < opt.site_checkpoints.size() && opt.site_checkpoints[next_cp] > x)
        d = std::min(d, opt.site_checkpoints[next_cp] - x);
      if (x < 0) d = std::min(d, -x);  // keep below-zero blocks fully below zero
      if (d >= 17 && cap_room >= 17) {
        std::uint64_t j = static_cast<std::uint64_t>(d - 1);
        if (j > cap_room) j = cap_room - 1;
        const std::uint64_t right = rng.binomial(j, 0.5);
        steps += j;
        obs.left_steps += j - right;
        if (x < 0) obs.steps_below_zero += j;
        const std::int64_t lo_bound = x - static_cast<std::int64_t>(j);
        if (lo_bound < obs.min_site) obs.min_site = lo_bound;
        x += 2 * static_cast<std::int64_t>(right) - static_cast<std::int64_t>(j);
        continue;
      }
    }
    // Single step.
    int dir;
    if (x == lm) {
      const double w = env.mark(k_left + 1).lambda;
      dir = rng.uniform() < w ? 1 : -1;
    } else {
      dir = rng.pm_step();
    }
    ++steps;
    if (x < 0) ++obs.steps_below_zero;
    if (dir > 0) {
      ++x;
      if (x == rm) {
        ++k_left;
        lm = rm;
        rm = env.S(k_left + 1);
      }
    } else {
      ++obs.left_steps;
      --x;
      if (x < lm) {
        --k_left;
        rm = lm;
        lm = env.S(k_left);
      }
      if (x < obs.min_site) obs.min_site = x;
    }
    if (dir > 0) arrive(x);
  }
  obs.t_n = steps;
  return obs;
}

// Position after exactly `steps` steps (used by the LLN scenario).
inline std::int64_t run_walk_for_steps(EnvBlock& env, std::uint64_t steps, Rng& rng) {
  std::int64_t x = 0;
  std::int64_t k_left = env.mark_index_at_or_below(0);
  std::int64_t lm = env.S(k_left);
  std::int64_t rm = env.S(k_left + 1);
  for (std::uint64_t s = 0; s < steps; ++s) {
    int dir;
    if (x == lm)
      dir = rng.uniform() < env.mark(k_left + 1).lambda ? 1 : -1;
    else
      dir = rng.pm_step();
    if (dir > 0) {
      ++x;
      if (x == rm) {
        ++k_left;
        lm = rm;
        rm = env.S(k_left + 1);
      }
    } else {
      --x;
      if (x < lm) {
        --k_left;
        rm = lm;
        lm = env.S(k_left);
      }
    }
  }
  return x;
}

// First passage to n of the symmetric walk with no biased site anywhere
// (every omega = 1/2) and no lower barrier; T_n is finite a.s. but heavy
// tailed, so the block size from x is (n - x) - 1 with no lower cutoff.
inline WalkObservables fair_first_passage(std::int64_t n, Rng& rng,
                                          std::uint64_t step_cap = 1ULL << 50) {
  WalkObservables obs;
  std::int64_t x = 0;
  std::uint64_t steps = 0;
  while (x != n) {
    const std::int64_t d = n - x;
    if (d >= 17 && step_cap - steps >= 17) {
      std::uint64_t j = static_cast<std::uint64_t>(d - 1);
      if (j > step_cap - steps) j = step_cap - steps - 1;
      const std::uint64_t right = rng.binomial(j, 0.5);
      steps += j;
      obs.left_steps += j - right;
      const std::int64_t lo = x - static_cast<std::int64_t>(j);
      if (lo < obs.min_site) obs.min_site = lo;
      x += 2 * static_cast<std::int64_t>(right) - static_cast<std::int64_t>(j);
    } else {
      if (steps >= step_cap) {
        obs.capped = true;
        break;
      }
      const int dir = rng.pm_step();
      ++steps;
      if (dir > 0) {
        ++x;
      } else {
        ++obs.left_steps;
        --x;
        if (x < obs.min_site) obs.min_site = x;
      }
    }
  }
  obs.t_n = steps;
  return obs;
}

// Exact sampler of T_n conditioned on {T_n < infinity} for a quenched
// environment that is transient to the left (E log rho > 0). Uses the
// Doob h-transform with h(x) = P_x{hit n before -inf}; with
// gamma_k = prod_{j=m+1..k} rho_j (relative weights), h(x) is
// proportional to A(x) = sum_{k < x} gamma_k, which converges because
// gamma decays geometrically to the left. The transformed step law
// p~(x -> x+1) = omega_x A(x+1) / (omega_x A(x+1) + (1-omega_x) A(x-1))
// reproduces the conditional path law exactly.
class ConditionedWalk {
 public:
  ConditionedWalk(EnvBlock& env, std::int64_t n) : n_(n) {
    // Build gamma downward from site n-1 until the weights are negligible.
    std::vector<double> gamma;
    double g = 1.0, g_max = 1.0;
    std::int64_t site = n - 1;
    for (;; --site) {
      gamma.push_back(g);
      if (site <= -16 && g < g_max * 1e-25) break;
      if (n - 1 - site > 4'000'000)
        throw std::runtime_error("harmonic weights do not decay: environment not left-transient");
      const double w = env.omega_at(site);
      g /= (1.0 - w) / w;  // gamma_{site-1} = gamma_site / rho_site
      if (g > g_max) g_max = g;
    }
    x_lo_ = site;  // gamma covers sites x_lo_ .. n-1 (reversed)
    // A(x) = sum_{k <= x-1} gamma_k, for x in [x_lo_, n].
    a_.assign(static_cast<std::size_t>(n - x_lo_) + 1, 0.0);
    double acc = 0.0;
    for (std::int64_t x = x_lo_ + 1; x <= n; ++x) {
      acc += gamma[static_cast<std::size_t>(n - x)];
      a_[static_cast<std::size_t>(x - x_lo_)] = acc;
    }
    omega_.resize(static_cast<std::size_t>(n - x_lo_));
    for (std::int64_t x = x_lo_; x < n; ++x)
      omega_[static_cast<std::size_t>(x - x_lo_)] = env.omega_at(x);
  }

  WalkObservables run(Rng& rng) const {
    WalkObservables obs;
    std::int64_t x = 0;
    std::uint64_t steps = 0;
    while (x != n_) {
      if (x <= x_lo_) throw std::runtime_error("conditioned walk left the truncated window");
      const double w = omega_[static_cast<std::size_t>(x - x_lo_)];
      const double up = w * a_[static_cast<std::size_t>(x + 1 - x_lo_)];
      const double down = (1.0 - w) * a_[static_cast<std::size_t>(x - 1 - x_lo_)];
      ++steps;
      if (rng.uniform() * (up + down) < up) {
        ++x;
      } else {
        --x;
        ++obs.left_steps;
        if (x < obs.min_site) obs.min_site = x;
        if (x < 0) ++obs.steps_below_zero;
      }
    }
    obs.t_n = steps;
    return obs;
  }

 private:
  std::int64_t n_;
  std::int64_t x_lo_ = 0;
  std::vector<double> a_;      // A(x) for x in [x_lo_, n]
  std::vector<double> omega_;  // omega_x for x in [x_lo_, n)
};

// Trap chain: index of the last marked site visited; updates to k exactly
// when the walk sits at S_k.
inline std::vector<std::int64_t> trap_chain(const std::vector<std::int64_t>& path,
                                            EnvBlock& env) {
  std::vector<std::int64_t> out;
  out.reserve(path.size());
  std::int64_t cur = 0;
  for (std::int64_t site : path) {
    const std::int64_t k = env.mark_index_at_or_below(site);
    if (env.S(k) == site) cur = k;
    out.push_back(cur);
  }
  return out;
}

// First passage of the SRW reflected at the origin (forced step 0 -> 1)
// to level n; exact blocked sampling away from both boundaries.
inline std::uint64_t reflected_first_passage(std::int64_t n, Rng& rng) {
  if (n <= 0) return 0;
  std::int64_t x = 0;
  std::uint64_t steps = 0;
  while (x != n) {
    if (x == 0) {
      x = 1;
      ++steps;
      continue;
    }
    const std::int64_t d = std::min(x, n - x);
    if (d >= 17) {
      const std::uint64_t j = static_cast<std::uint64_t>(d - 1);
      x += 2 * static_cast<std::int64_t>(rng.binomial(j, 0.5)) - static_cast<std::int64_t>(j);
      steps += j;
    } else {
      x += rng.pm_step();
      ++steps;
    }
  }
  return steps;
}

// Exit time of the symmetric SRW from {-m,...,m} started at 0.
inline std::uint64_t srw_exit_time(std::int64_t m, Rng& rng) {
  std::int64_t x = 0;
  std::uint64_t steps = 0;
  for (;;) {
    const std::int64_t d = m - (x < 0 ? -x : x);
    if (d == 0) return steps;
    if (d >= 17) {
      const std::uint64_t j = static_cast<std::uint64_t>(d - 1);
      x += 2 * static_cast<std::int64_t>(rng.binomial(j, 0.5)) - static_cast<std::int64_t>(j);
      steps += j;
    } else {
      x += rng.pm_step();
      ++steps;
    }
  }
}

}  // namespace rwsre
