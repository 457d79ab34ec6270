#pragma once

// Samplers for the limit random variables: theta (Laplace transform
// 1/cosh sqrt(s)), M(1) = 2 theta, the coupled Levy pair (L1, L2) with
// measure mu, chi, the independent-subordinator functional, and the
// beta = 1 marginals L2(1).

#include <cmath>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "rwsre/heavytail.hpp"
#include "rwsre/rng.hpp"
#include "rwsre/walk.hpp"

namespace rwsre {

namespace detail {
inline constexpr double kPi = 3.14159265358979323846;

inline double normal_upper(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }
}  // namespace detail

// P{tau > t} for the Brownian exit time tau from (-1,1) started at 0.
// Spectral series for t >= 0.3, reflection (erfc) series below; the two
// agree to ~1e-12 on the overlap (asserted in tests).
inline double bm_exit_survival(double t) {
  if (t <= 0.0) return 1.0;
  if (t >= 0.3) {
    double s = 0.0;
    for (int k = 0;; ++k) {
      const double n = 2.0 * k + 1.0;
      const double term = (k % 2 == 0 ? 1.0 : -1.0) / n *
                          std::exp(-n * n * detail::kPi * detail::kPi * t / 8.0);
      s += term;
      if (std::fabs(term) < 1e-18) break;
    }
    return 4.0 / detail::kPi * s;
  }
  // P{max |B_s| >= 1} = 4 sum_{k>=0} (-1)^k Phi-bar((2k+1)/sqrt(t))
  double hit = 0.0;
  const double rt = std::sqrt(t);
  for (int k = 0;; ++k) {
    const double term = (k % 2 == 0 ? 1.0 : -1.0) * detail::normal_upper((2.0 * k + 1.0) / rt);
    hit += term;
    if (std::fabs(term) < 1e-18) break;
  }
  return 1.0 - 4.0 * hit;
}

inline double bm_exit_quantile(double u) {
  // solve P{tau <= q} = u
  double lo = 0.0, hi = 1.0;
  while (1.0 - bm_exit_survival(hi) < u) hi *= 2.0;
  for (int i = 0; i < 80; ++i) {
    const double mid = 0.5 * (lo + hi);
    (1.0 - bm_exit_survival(mid) < u ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// theta = tau / 2. Bulk draws use a cached 2^16-point quantile table
// (linear interpolation; exact bisection in the extreme tails).
class ThetaSampler {
 public:
  static double draw_series(Rng& rng) { return bm_exit_quantile(rng.uniform()) / 2.0; }

  static double draw_srw(int m, Rng& rng) {
    const double t = static_cast<double>(srw_exit_time(m, rng));
    return t / (2.0 * static_cast<double>(m) * static_cast<double>(m));
  }

  static double draw(Rng& rng) {
    const auto& q = table();
    const double u = rng.uniform();
    const double pos = u * static_cast<double>(kN);
    const std::size_t i = static_cast<std::size_t>(pos);
    if (i == 0 || i >= kN - 1) return bm_exit_quantile(u) / 2.0;
    const double frac = pos - static_cast<double>(i);
    return (q[i] + frac * (q[i + 1] - q[i])) / 2.0;
  }

  // E theta^p by deterministic quadrature. The substitution u = t^p turns
  // int p t^{p-1} P{theta > t} dt into int P{theta > u^{1/p}} du, whose
  // integrand is bounded and flat at 0 for every p > 0.
  static double moment(double p) {
    const int n = 200000;
    const double top = std::pow(20.0, p);
    double acc = 0.0, prev = 1.0;
    for (int i = 1; i <= n; ++i) {
      const double u = top * i / n;
      const double f = bm_exit_survival(2.0 * std::pow(u, 1.0 / p));
      acc += 0.5 * (prev + f);
      prev = f;
    }
    return acc * (top / n);
  }

 private:
  static constexpr std::size_t kN = 1 << 16;

  static const std::vector<double>& table() {
    static std::vector<double> q = [] {
      std::vector<double> t(kN);
      for (std::size_t i = 1; i < kN; ++i)
        t[i] = bm_exit_quantile(static_cast<double>(i) / static_cast<double>(kN));
      t[0] = 0.0;
      return t;
    }();
    return q;
  }
};

inline double sample_theta(Rng& rng) { return ThetaSampler::draw(rng); }
inline double sample_M1(Rng& rng) { return 2.0 * ThetaSampler::draw(rng); }

struct LevyPairDraw {
  double l1_left = 0.0;
  double l2_left = 0.0;
  double passage_time = 0.0;
  std::uint64_t jump_count = 0;
  double eps = 0.0;
  bool drift_crossing = false;
  double overshoot_jump = 0.0;  // the L1 jump that crossed level 1 (0 for drift)
};

// Jump representation of the measure mu: coupled points (u, u^2 theta)
// with u-intensity beta u^{-beta-1} du and theta iid copies of theta,
// plus an independent pure-second-coordinate (beta/2)-stable component of
// weight C_mu - E theta^{beta/2}. Jumps with u <= eps are replaced by
// their deterministic mean drift (documented bias control).
struct LevyPairOptions {
  bool disable_coupled = false;   // degenerate checks
  bool disable_pure = false;
};

inline LevyPairDraw sample_levy_pair(double beta, double c_mu, double eps, Rng& rng,
                                     const LevyPairOptions& opt = {}) {
  if (beta <= 0.0 || beta >= 1.0) throw std::invalid_argument("beta outside (0,1)");
  if (eps <= 0.0 || eps > 1e-3) throw std::invalid_argument("eps outside (0, 1e-3]");
  static double cached_p = -1.0;
  static double cached_m = 0.0;
  static std::mutex mu_mutex;
  double e_theta_b2;
  {
    std::lock_guard<std::mutex> lk(mu_mutex);
    if (cached_p != beta / 2.0) {
      cached_m = ThetaSampler::moment(beta / 2.0);
      cached_p = beta / 2.0;
    }
    e_theta_b2 = cached_m;
  }
  const double w2 = c_mu - e_theta_b2;
  if (w2 < -3e-3)  // 3 sigma of the recorded moment error budget
    throw std::invalid_argument("C_mu below E theta^{beta/2}: inconsistent constant");

  const double rate1 = opt.disable_coupled ? 0.0 : std::pow(eps, -beta);
  const double eps2 = eps * eps;
  const double rate2 =
      (opt.disable_pure || w2 <= 0.0) ? 0.0 : w2 * std::pow(eps2, -beta / 2.0);
  // L1 drift: mean of small coupled jumps; L2 drift: their squares plus
  // the small pure jumps.
  const double d1 = opt.disable_coupled ? 0.0 : beta * std::pow(eps, 1.0 - beta) / (1.0 - beta);
  double d2 = 0.0;
  if (!opt.disable_coupled)
    d2 += 0.5 * beta * std::pow(eps, 2.0 - beta) / (2.0 - beta);  // E theta = 1/2
  if (!opt.disable_pure && w2 > 0.0)
    d2 += w2 * (beta / 2.0) * std::pow(eps2, 1.0 - beta / 2.0) / (1.0 - beta / 2.0);

  LevyPairDraw out;
  out.eps = eps;
  double t = 0.0, l1 = 0.0, l2 = 0.0;
  const double total_rate = rate1 + rate2;
  for (;;) {
    const double dt = total_rate > 0.0 ? rng.exponential() / total_rate : kInf;
    if (d1 > 0.0 && l1 + d1 * dt >= 1.0) {
      const double until = (1.0 - l1) / d1;
      out.passage_time = t + until;
      out.l1_left = 1.0;
      out.l2_left = l2 + d2 * until;
      out.drift_crossing = true;
      return out;
    }
    if (total_rate == 0.0) throw std::invalid_argument("all jump components disabled");
    t += dt;
    l1 += d1 * dt;
    l2 += d2 * dt;
    ++out.jump_count;
    if (rng.uniform() < rate1 / total_rate) {
      const double u = eps * std::pow(rng.uniform(), -1.0 / beta);
      const double theta = ThetaSampler::draw(rng);
      if (l1 + u > 1.0) {
        out.passage_time = t;
        out.l1_left = l1;
        out.l2_left = l2;
        out.overshoot_jump = u;
        return out;
      }
      l1 += u;
      l2 += u * u * theta;
    } else {
      l2 += eps2 * std::pow(rng.uniform(), -2.0 / beta);
    }
  }
}

// mu{(u,v): u > x1 or v > x2} = x1^{-beta} + C_mu x2^{-beta/2}
//                               - E min(x1^{-beta}, x2^{-beta/2} theta^{beta/2}),
// with the expectation evaluated by deterministic quadrature:
// E min(A, B theta^p) = int_0^A P{theta > (t/B)^{1/p}} dt.
inline double mu_tail(double beta, double c_mu, double x1, double x2) {
  const double p = beta / 2.0;
  const double A = std::pow(x1, -beta);
  const double B = std::pow(x2, -p);
  const int n = 20000;
  double e_min = 0.0, prev = 1.0;  // P{theta > 0} = 1
  for (int i = 1; i <= n; ++i) {
    const double t = A * i / n;
    const double f = bm_exit_survival(2.0 * std::pow(t / B, 1.0 / p));
    e_min += 0.5 * (prev + f);
    prev = f;
  }
  e_min *= A / n;
  return A + c_mu * B - e_min;
}

// Jump stream of the Poisson random measure with intensity LEB x mu,
// truncated at u > eps (coupled jumps (u, u^2 theta)) and v > eps^2
// (pure second-coordinate jumps, weight C_mu - E theta^{beta/2}).
class MuJumpStream {
 public:
  struct Jump {
    double t;  // arrival time
    double u;  // first coordinate (0 for pure jumps)
    double v;  // second coordinate
  };

  MuJumpStream(double beta, double c_mu, double eps, Rng& rng)
      : beta_(beta), eps_(eps), rng_(&rng) {
    const double w2 = c_mu - ThetaSampler::moment(beta / 2.0);
    rate1_ = std::pow(eps, -beta);
    rate2_ = w2 > 0.0 ? w2 * std::pow(eps * eps, -beta / 2.0) : 0.0;
  }

  Jump next() {
    t_ += rng_->exponential() / (rate1_ + rate2_);
    if (rng_->uniform() * (rate1_ + rate2_) < rate1_) {
      const double u = eps_ * std::pow(rng_->uniform(), -1.0 / beta_);
      return {t_, u, u * u * ThetaSampler::draw(*rng_)};
    }
    return {t_, 0.0, eps_ * eps_ * std::pow(rng_->uniform(), -2.0 / beta_)};
  }

 private:
  double beta_, eps_;
  double rate1_ = 0.0, rate2_ = 0.0;
  double t_ = 0.0;
  Rng* rng_;
};

inline double sample_chi(double beta, double c_mu, double eps, Rng& rng,
                         const LevyPairOptions& opt = {}) {
  double l1_left = 0.0, l2_left = 0.0;
  if (!(opt.disable_coupled && opt.disable_pure)) {
    const LevyPairDraw d = sample_levy_pair(beta, c_mu, eps, rng, opt);
    l1_left = d.l1_left;
    l2_left = d.l2_left;
  }
  const double theta = ThetaSampler::draw(rng);
  return l2_left + theta * (1.0 - l1_left) * (1.0 - l1_left);
}

// 2.2-type limit: L2_hat(L1_hat^{<-}(1)) with independent beta- and
// alpha-stable subordinators, nu_1 tail x^{-beta}, nu_2 tail C_Z x^{-alpha}.
inline double sample_indep_limit(double alpha, double beta, double c_z, Rng& rng) {
  if (c_z <= 0.0) return 0.0;
  const double tau = inverse_subordinator_at_1(beta, rng);
  return subordinator_marginal(alpha, c_z, tau, rng);
}

// beta = 1 marginals: L2(1) with the chosen index and tail constant.
inline double sample_L2_at_1(double index, double tail_const, Rng& rng) {
  return subordinator_marginal(index, tail_const, 1.0, rng);
}

}  // namespace rwsre
