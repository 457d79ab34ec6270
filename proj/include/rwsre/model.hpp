#pragma once

// Model specification: the joint law of (xi, lambda) plus regime metadata.
// xi is the integer gap between consecutive marked sites, lambda the drift
// probability placed at a mark; rho = (1-lambda)/lambda.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/digamma.hpp>

#include "rwsre/rng.hpp"

namespace rwsre {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
// Clamp for integerized heavy-tail draws so prefix sums fit int64.
inline constexpr double kXiMax = 1e15;

enum class XiFamily { Constant, ShiftedGeometric, Pareto };
enum class EllKind { Const, LogGrow, LogDecay };
enum class LambdaFamily { Constant, TwoPoint, Beta, RhoLognormal };
enum class Coupling { Independent, RankCoupled };

struct XiLaw {
  XiFamily family = XiFamily::Constant;
  double value = 1.0;    // Constant
  double p_geo = 0.5;    // ShiftedGeometric: xi = 1 + Geom(p)
  double beta = 0.5;     // Pareto tail index
  EllKind ell = EllKind::Const;
  double ell_c = 1.0;  // multiplicative constant of ell
  double ell_p = 0.5;  // exponent of the (1+log t)^{+-p} factor

  double ell_at(double t) const {
    switch (ell) {
      case EllKind::Const:
        return ell_c;
      case EllKind::LogGrow:
        return ell_c * std::pow(1.0 + std::log(t), ell_p);
      case EllKind::LogDecay:
        return ell_c * std::pow(1.0 + std::log(t), -ell_p);
    }
    return ell_c;
  }

  // P{xi_cont > t} for the continuous Pareto before integerization;
  // equals P{xi > t} exactly at integer t.
  double tail(double t) const {
    switch (family) {
      case XiFamily::Constant:
        return t < value ? 1.0 : 0.0;
      case XiFamily::ShiftedGeometric: {
        if (t < 1.0) return 1.0;
        const double k = std::floor(t - 1.0) + 1.0;  // P{1+G > t} = (1-p)^k
        return std::pow(1.0 - p_geo, k);
      }
      case XiFamily::Pareto: {
        if (t <= 1.0) return 1.0;
        return std::min(1.0, ell_at(t) * std::pow(t, -beta));
      }
    }
    return 0.0;
  }

  // Inverse of tail on (0,1]; closed form for ell == Const, monotone
  // bisection otherwise (validity of monotone tail checked in validate()).
  double quantile_cont(double u) const {
    switch (family) {
      case XiFamily::Constant:
        return value;
      case XiFamily::ShiftedGeometric:
        return 1.0 + std::floor(std::log(u) / std::log1p(-p_geo));
      case XiFamily::Pareto: {
        if (ell == EllKind::Const) {
          if (u >= ell_c * 1.0) return 1.0;
          return std::pow(ell_c / u, 1.0 / beta);
        }
        if (tail(1.0 + 1e-12) <= u) return 1.0;
        double lo = 1.0, hi = 2.0;
        while (tail(hi) > u && hi < 1e30) hi *= 2.0;
        for (int i = 0; i < 200; ++i) {
          const double mid = std::sqrt(lo * hi);
          (tail(mid) > u ? lo : hi) = mid;
          if (hi / lo < 1.0 + 1e-14) break;
        }
        return std::sqrt(lo * hi);
      }
    }
    return 1.0;
  }

  std::int64_t integerize(double t) const {
    const double c = std::ceil(std::min(t, kXiMax));
    return c < 1.0 ? 1 : static_cast<std::int64_t>(c);
  }

  std::int64_t sample(Rng& rng) const {
    if (family == XiFamily::Constant) return static_cast<std::int64_t>(value);
    return integerize(quantile_cont(rng.uniform()));
  }

  bool bounded() const { return family == XiFamily::Constant; }

  double mean() const {
    switch (family) {
      case XiFamily::Constant:
        return value;
      case XiFamily::ShiftedGeometric:
        return 1.0 + (1.0 - p_geo) / p_geo;
      case XiFamily::Pareto: {
        if (beta < 1.0) return kInf;
        // beta == 1: finite iff the integral of ell(t)/t converges.
        if (ell == EllKind::LogDecay && ell_p > 1.0) {
          double s = 0.0;  // E xi = sum_{n>=0} P{xi > n}
          for (double n = 0.0, term = 1.0; term > 1e-12; ++n) {
            term = tail(n);
            s += term;
            if (n > 1e7) return kInf;
          }
          return s;
        }
        return kInf;
      }
    }
    return kInf;
  }

  double mean_sq() const {
    switch (family) {
      case XiFamily::Constant:
        return value * value;
      case XiFamily::ShiftedGeometric: {
        const double q = 1.0 - p_geo;
        return 1.0 + 2.0 * q / p_geo + q * (2.0 - p_geo) / (p_geo * p_geo);
      }
      case XiFamily::Pareto:
        return kInf;
    }
    return kInf;
  }

  void validate() const {
    if (family == XiFamily::Constant && (value < 1.0 || value != std::floor(value)))
      throw std::invalid_argument("constant xi must be an integer >= 1");
    if (family == XiFamily::ShiftedGeometric && (p_geo <= 0.0 || p_geo > 1.0))
      throw std::invalid_argument("shifted-geometric p outside (0,1]");
    if (family == XiFamily::Pareto) {
      if (beta <= 0.0 || beta > 1.0)
        throw std::invalid_argument("pareto beta outside (0,1]");
      if (ell_c <= 0.0) throw std::invalid_argument("ell constant must be positive");
      // The implemented ell families must keep the tail nonincreasing.
      double prev = 1.0;
      for (double t = 1.0; t < 1e12; t *= 1.27) {
        const double cur = tail(t);
        if (cur > prev * (1.0 + 1e-12))
          throw std::invalid_argument("xi tail not monotone for these ell parameters");
        prev = cur;
      }
    }
  }
};

struct LambdaLaw {
  LambdaFamily family = LambdaFamily::Constant;
  double value = 0.5;           // Constant
  double a = 0.5, b = 0.5;      // TwoPoint values / Beta shape parameters
  double p = 0.5;               // TwoPoint: lambda = a w.p. p, b w.p. 1-p
  double mu = 0.0, sigma = 1.0; // RhoLognormal: rho = exp(mu + sigma N)

  double quantile(double u) const {
    switch (family) {
      case LambdaFamily::Constant:
        return value;
      case LambdaFamily::TwoPoint:
        return u < p ? a : b;
      case LambdaFamily::Beta:
        return boost::math::quantile(boost::math::beta_distribution<double>(a, b), u);
      case LambdaFamily::RhoLognormal: {
        const double z = boost::math::quantile(boost::math::normal_distribution<double>(), u);
        return 1.0 / (1.0 + std::exp(mu + sigma * z));
      }
    }
    return value;
  }

  double sample(Rng& rng) const {
    if (family == LambdaFamily::Constant) return value;
    if (family == LambdaFamily::TwoPoint) return rng.uniform() < p ? a : b;
    if (family == LambdaFamily::RhoLognormal)
      return 1.0 / (1.0 + std::exp(mu + sigma * rng.normal()));
    return quantile(rng.uniform());
  }

  // E rho^x, closed form; +inf when the moment diverges.
  double mellin_rho(double x) const {
    switch (family) {
      case LambdaFamily::Constant:
        return std::pow((1.0 - value) / value, x);
      case LambdaFamily::TwoPoint:
        return p * std::pow((1.0 - a) / a, x) + (1.0 - p) * std::pow((1.0 - b) / b, x);
      case LambdaFamily::Beta: {
        // rho = (1-lambda)/lambda, lambda ~ Beta(a,b): E rho^x = B(a-x,b+x)/B(a,b).
        if (x >= a) return kInf;
        return std::exp(std::lgamma(a - x) + std::lgamma(b + x) -
                        std::lgamma(a) - std::lgamma(b));
      }
      case LambdaFamily::RhoLognormal:
        return std::exp(mu * x + 0.5 * sigma * sigma * x * x);
    }
    return kInf;
  }

  double mean_log_rho() const {
    switch (family) {
      case LambdaFamily::Constant:
        return std::log((1.0 - value) / value);
      case LambdaFamily::TwoPoint:
        return p * std::log((1.0 - a) / a) + (1.0 - p) * std::log((1.0 - b) / b);
      case LambdaFamily::Beta:
        return boost::math::digamma(b) - boost::math::digamma(a);
      case LambdaFamily::RhoLognormal:
        return mu;
    }
    return 0.0;
  }

  void validate() const {
    auto in01 = [](double v) { return v > 0.0 && v < 1.0; };
    switch (family) {
      case LambdaFamily::Constant:
        if (!in01(value)) throw std::invalid_argument("lambda must lie strictly in (0,1)");
        break;
      case LambdaFamily::TwoPoint:
        if (!in01(a) || !in01(b) || p < 0.0 || p > 1.0)
          throw std::invalid_argument("two-point lambda values must lie strictly in (0,1)");
        break;
      case LambdaFamily::Beta:
        if (a <= 0.0 || b <= 0.0) throw std::invalid_argument("beta shapes must be positive");
        break;
      case LambdaFamily::RhoLognormal:
        if (sigma <= 0.0) throw std::invalid_argument("lognormal sigma must be positive");
        break;
    }
  }
};

struct ModelSpec {
  XiLaw xi;
  LambdaLaw lambda;
  Coupling coupling = Coupling::Independent;
  std::optional<double> alpha_hint;

  double beta() const { return xi.family == XiFamily::Pareto ? xi.beta : kInf; }

  void validate() const {
    xi.validate();
    lambda.validate();
  }

  // One (xi_k, lambda_k) draw. Rank coupling pushes a single uniform
  // through both quantile functions (comonotone stress-test family).
  std::pair<std::int64_t, double> sample_mark(Rng& rng) const {
    if (coupling == Coupling::RankCoupled) {
      const double u = rng.uniform();
      return {xi.integerize(xi.quantile_cont(u)), lambda.quantile(u)};
    }
    const std::int64_t g = xi.sample(rng);
    return {g, lambda.sample(rng)};
  }
};

inline double rho_of(double lambda) { return (1.0 - lambda) / lambda; }

enum class SparsityClass { Weak, Moderate, Strong };

struct SpeedResult {
  SparsityClass cls;
  double v;
};

// Asymptotic speed: v = (1-Erho)Exi / ((1-Erho)Exi^2 + 2 E(rho xi) Exi)
// when Erho < 1, E(rho xi) < inf, Exi^2 < inf; zero otherwise.
inline SpeedResult classify_and_speed(const ModelSpec& spec,
                                      std::uint64_t quad_seed = 7,
                                      std::uint64_t quad_draws = 10'000'000) {
  const double exi = spec.xi.mean();
  SparsityClass cls = spec.xi.bounded()
                          ? SparsityClass::Weak
                          : (std::isfinite(exi) ? SparsityClass::Moderate : SparsityClass::Strong);
  const double erho = spec.lambda.mellin_rho(1.0);
  const double exi2 = spec.xi.mean_sq();
  double erhoxi;
  if (spec.coupling == Coupling::Independent) {
    erhoxi = erho * exi;
  } else {
    Rng q(mix_key(quad_seed, 0x51554144ULL));
    double s = 0.0;
    for (std::uint64_t i = 0; i < quad_draws; ++i) {
      auto [g, l] = spec.sample_mark(q);
      s += rho_of(l) * static_cast<double>(g);
    }
    erhoxi = s / static_cast<double>(quad_draws);
  }
  double v = 0.0;
  if (erho < 1.0 && std::isfinite(exi) && std::isfinite(exi2) && std::isfinite(erhoxi)) {
    v = (1.0 - erho) * exi / ((1.0 - erho) * exi2 + 2.0 * erhoxi * exi);
  }
  return {cls, v};
}

struct AlphaResult {
  std::optional<double> alpha;
  // When no root exists: verified interval (0, probe_limit] with E rho^x < 1.
  double probe_limit = 0.0;
  bool diverging_moment = false;  // E rho^x became nonfinite before crossing 1
};

// Root of E rho^alpha = 1 on (0,inf); the map x -> E rho^x is convex with
// f(0) = 1 and f'(0) = E log rho < 0, so any crossing is unique.
inline AlphaResult solve_alpha(const ModelSpec& spec, double tol = 1e-10) {
  const auto& law = spec.lambda;
  if (!(law.mean_log_rho() < 0.0))
    throw std::invalid_argument("solve_alpha requires E log rho < 0");
  constexpr double kProbeLimit = 64.0;
  double lo = 0.0, hi = 0.0;
  for (double x = 1e-3; x <= kProbeLimit; x *= 2.0) {
    const double f = law.mellin_rho(x);
    if (!std::isfinite(f)) {
      // Convexity: the moment blows up approaching some x*; the crossing of 1
      // happens strictly before x*, so refine between the last finite point.
      double flo = lo, fhi = x;
      for (int i = 0; i < 200 && std::isfinite(law.mellin_rho(flo)); ++i) {
        const double mid = 0.5 * (flo + fhi);
        (std::isfinite(law.mellin_rho(mid)) && law.mellin_rho(mid) < 1.0 ? flo : fhi) = mid;
        if (fhi - flo < 1e-13) break;
      }
      if (std::isfinite(law.mellin_rho(fhi)) || law.mellin_rho(flo) < 1.0) {
        if (!std::isfinite(law.mellin_rho(fhi)) && law.mellin_rho(flo) < 1.0)
          return {std::nullopt, flo, true};
      }
      hi = fhi;
      break;
    }
    if (f >= 1.0) {
      hi = x;
      break;
    }
    lo = x;
  }
  if (hi == 0.0) return {std::nullopt, kProbeLimit, false};
  if (lo == 0.0) lo = hi / 1024.0;
  for (int i = 0; i < 500; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double f = law.mellin_rho(mid);
    if (std::isfinite(f) && std::fabs(f - 1.0) <= tol) return {mid, 0.0, false};
    if (std::isfinite(f) && f < 1.0)
      lo = mid;
    else
      hi = mid;
  }
  return {0.5 * (lo + hi), 0.0, false};
}

}  // namespace rwsre
