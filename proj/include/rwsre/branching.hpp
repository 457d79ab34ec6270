#pragma once

// The fast engine: branching process with immigration equivalent to the
// walk, extinction-time blocks with the population partition, and the
// quenched mean of the correction term Y_n.
//
// Generation sizes are carried in double: all integer values below 2^53
// are exact (covers every identity/cross-engine test); the negative
// binomial is an exact (u+1)-fold geometric convolution for u+1 <= 4 and
// an exact gamma-Poisson mixture above; beyond mean 2^40 the Poisson and
// gamma draws switch to their normal limits, where the approximation
// error is ~1e-6 of one standard deviation.

#include <cmath>
#include <cstdint>
#include <vector>

#include "rwsre/environment.hpp"
#include "rwsre/rng.hpp"
#include "rwsre/walk.hpp"

namespace rwsre {

// Sum of (u+1) iid Geom(omega) draws (Geom on {0,1,...}).
inline double nb_generation_step(double u, double omega, Rng& rng) {
  if (omega >= 1.0) return 0.0;
  const double trials = u + 1.0;
  if (trials <= 4.0) {
    double s = 0.0;
    for (double i = 0.0; i < trials; ++i)
      s += static_cast<double>(rng.geometric(omega));
    return s;
  }
  const double scale = (1.0 - omega) / omega;
  double mean;
  if (trials <= double(1ULL << 40)) {
    mean = rng.gamma(trials) * scale;
  } else {
    mean = (trials + std::sqrt(trials) * rng.normal()) * scale;
    if (mean < 0.0) mean = 0.0;
  }
  if (mean <= double(1ULL << 40)) return static_cast<double>(rng.poisson(mean));
  double v = mean + std::sqrt(mean) * rng.normal();
  return v < 0.0 ? 0.0 : std::floor(v);
}

// Variant without the immigrant: sum of u iid Geom(omega) draws.
inline double nb_offspring(double u, double omega, Rng& rng) {
  if (u <= 0.0) return 0.0;
  return nb_generation_step(u - 1.0, omega, rng);
}

struct BranchOptions {
  double t_cap = 0.0;               // capped when n + 2*total exceeds this (0 = off)
  double below_zero_progeny_cap = 1e8;
  double divergence_size = 0.0;     // below zero: generation >= this => capped (0 = off)
};

struct BranchResult {
  double t_n = 0.0;
  bool capped = false;
  double above_zero_sum = 0.0;  // sum of U_i, 0 <= i <= n-1
};

// T_n via the U-recursion: generations from site n-1 down to 0 with unit
// immigration, then below zero with immigration off until extinction;
// T_n = n + 2 * (total sum).
inline BranchResult hitting_time_branching(EnvBlock& env, std::int64_t n, Rng& rng,
                                           const BranchOptions& opt = {}) {
  BranchResult res;
  double u = 0.0, total = 0.0;
  const double half_cap = opt.t_cap > 0.0 ? 0.5 * (opt.t_cap - static_cast<double>(n)) : 0.0;
  // Descending mark cursor: largest k with S_k <= current site.
  std::int64_t k = env.mark_index_at_or_below(n - 1);
  std::int64_t s_k = env.S(k);
  for (std::int64_t site = n - 1; site >= 0; --site) {
    while (site < s_k) {
      --k;
      s_k = env.S(k);
    }
    const double w = (site == s_k) ? env.mark(k + 1).lambda : 0.5;
    u = nb_generation_step(u, w, rng);
    total += u;
    if (opt.t_cap > 0.0 && total > half_cap) {
      res.capped = true;
      res.t_n = static_cast<double>(n) + 2.0 * total;
      return res;
    }
  }
  res.above_zero_sum = total;
  // Below zero: immigration off; continue until extinction.
  double below = 0.0;
  for (std::int64_t site = -1; u > 0.0; --site) {
    while (site < s_k) {
      --k;
      s_k = env.S(k);
    }
    const double w = (site == s_k) ? env.mark(k + 1).lambda : 0.5;
    u = nb_offspring(u, w, rng);
    total += u;
    below += u;
    if ((opt.t_cap > 0.0 && total > half_cap) ||
        below > opt.below_zero_progeny_cap ||
        (opt.divergence_size > 0.0 && u >= opt.divergence_size)) {
      res.capped = true;
      break;
    }
  }
  res.t_n = static_cast<double>(n) + 2.0 * total;
  return res;
}

struct BlockRecord {
  std::int64_t k = 0;          // extinction index (1-based)
  std::int64_t tau_inc = 0;    // tau_k - tau_{k-1}, in marks
  std::int64_t s_inc = 0;      // S_{tau_k} - S_{tau_{k-1}}, in sites
  double w_bar = 0.0;          // total progeny in the block
  double w0 = 0.0;             // fresh-immigrant progeny in non-mark generations
  double w_down = 0.0;         // carried-over progeny in non-mark generations
  double z_sum = 0.0;          // sum of mark-generation sizes
};

// Forward simulation of Z with per-generation split into (a, b): a is the
// progeny of immigrants that arrived in the current inter-mark segment,
// b the progeny of the particles alive at the previous mark. Emits one
// record per extinction at a mark generation; extinctions elsewhere are
// ignored.
inline std::vector<BlockRecord> z_blocks(EnvBlock& env, std::int64_t max_marks, Rng& rng) {
  std::vector<BlockRecord> out;
  double a = 0.0, b = 0.0;
  BlockRecord cur;
  std::int64_t last_ext_mark = 0, last_ext_site = 0;
  for (std::int64_t i = 1; i <= max_marks; ++i) {
    const std::int64_t s_prev = env.S(i - 1);
    const std::int64_t s_i = env.S(i);
    a = 0.0;
    // b carries Z_{S_{i-1}} into the segment (0 right after an extinction).
    for (std::int64_t g = s_prev + 1; g <= s_i; ++g) {
      const double w = (g == s_i) ? env.mark(i + 1).lambda : 0.5;
      const double a2 = nb_generation_step(a, w, rng);  // includes the immigrant
      const double b2 = nb_offspring(b, w, rng);
      a = a2;
      b = b2;
      if (g < s_i) {
        cur.w0 += a2;
        cur.w_down += b2;
      } else {
        cur.z_sum += a2 + b2;
      }
    }
    b += a;  // Z_{S_i}; next segment starts fresh
    a = 0.0;
    if (b == 0.0) {
      cur.k = static_cast<std::int64_t>(out.size()) + 1;
      cur.tau_inc = i - last_ext_mark;
      cur.s_inc = s_i - last_ext_site;
      cur.w_bar = cur.w0 + cur.w_down + cur.z_sum;
      out.push_back(cur);
      cur = BlockRecord{};
      last_ext_mark = i;
      last_ext_site = s_i;
    }
  }
  return out;
}

// One draw of W^crit_n: critical Geom(1/2) process with unit immigration.
inline double critical_total_progeny(std::int64_t n, Rng& rng) {
  double z = 0.0, w = 0.0;
  for (std::int64_t g = 1; g <= n; ++g) {
    z = nb_generation_step(z, 0.5, rng);
    w += z;
  }
  return w;
}

// Closed-form quenched mean of the correction term Y_n:
// E_w Y_n = (n - S_{nu-1}) rho_1...rho_nu
//         + (n - S_{nu-1}) rho_nu (xi_1 rho_2...rho_{nu-1} + ... + xi_{nu-1}).
inline double quenched_mean_Y(EnvBlock& env, std::int64_t n) {
  const std::int64_t nu = env.nu_of(n);
  const std::int64_t s_prev = env.S(nu - 1);
  const double gap = static_cast<double>(n - s_prev);
  if (gap == 0.0) return 0.0;
  double prod_all = 1.0;  // rho_1 ... rho_nu
  for (std::int64_t j = 1; j <= nu; ++j) prod_all *= rho_of(env.mark(j).lambda);
  // sum_{m=1}^{nu-1} xi_m rho_{m+1} ... rho_{nu-1}  (empty product = 1)
  double acc = 0.0;
  for (std::int64_t m = 1; m <= nu - 1; ++m) {
    double prod = 1.0;
    for (std::int64_t j = m + 1; j <= nu - 1; ++j) prod *= rho_of(env.mark(j).lambda);
    acc += static_cast<double>(env.mark(m).xi) * prod;
  }
  return gap * prod_all + gap * rho_of(env.mark(nu).lambda) * acc;
}

// Monte Carlo draw of Y_n on a fixed environment: the number of left
// steps taken from sites in [0, S_{nu(n)-1}] during [T_{S_{nu(n)-1}}, T_n).
// Excursions below zero never contribute to Y; when the caller knows the
// environment returns from below zero almost surely (recurrent or
// right-transient below zero), skip_below_zero replaces each excursion by
// its certain outcome (return to 0), which preserves the law of Y.
inline double sample_Y(EnvBlock& env, std::int64_t n, Rng& rng,
                       std::uint64_t step_cap = 1'000'000'000,
                       bool skip_below_zero = false) {
  const std::int64_t nu = env.nu_of(n);
  const std::int64_t mid = env.S(nu - 1);
  std::int64_t x = 0;
  std::int64_t k_left = env.mark_index_at_or_below(0);
  std::int64_t lm = env.S(k_left);
  std::int64_t rm = env.S(k_left + 1);
  bool passed_mid = (mid == 0);
  double y = 0.0;
  for (std::uint64_t steps = 0; x != n && steps < step_cap; ++steps) {
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
      if (x == mid) passed_mid = true;
    } else {
      if (passed_mid && x >= 0 && x <= mid) y += 1.0;
      if (skip_below_zero && x == 0) continue;  // excursion below returns to 0
      --x;
      if (x < lm) {
        --k_left;
        rm = lm;
        lm = env.S(k_left);
      }
    }
  }
  return y;
}

}  // namespace rwsre
