#pragma once

// Normalizing-function toolkit (a, m, pi, pi*, lambda, w, kappa, c1, c2)
// tabulated on a log-log grid, plus exact positive-stable sampling via
// the Kanter construction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rwsre/model.hpp"
#include "rwsre/rng.hpp"

namespace rwsre {

// Monotone log-log interpolation table on [t_min, t_max].
class LogLogTable {
 public:
  LogLogTable() = default;
  LogLogTable(double t_min, double t_max, std::size_t n,
              const std::function<double(double)>& f) {
    lt_.reserve(n);
    lv_.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double lt = std::log(t_min) +
                        (std::log(t_max) - std::log(t_min)) * static_cast<double>(i) /
                            static_cast<double>(n - 1);
      const double v = f(std::exp(lt));
      if (!(v > 0.0) || !std::isfinite(v)) continue;  // flagged entry: skipped
      lt_.push_back(lt);
      lv_.push_back(std::log(v));
    }
    if (lt_.size() < 2) throw std::runtime_error("degenerate normalizer table");
  }

  double operator()(double t) const {
    const double lt = std::log(t);
    std::size_t hi = 1;
    if (lt <= lt_.front()) {
      hi = 1;
    } else if (lt >= lt_.back()) {
      hi = lt_.size() - 1;
    } else {
      hi = static_cast<std::size_t>(
          std::lower_bound(lt_.begin(), lt_.end(), lt) - lt_.begin());
      if (hi == 0) hi = 1;
    }
    const double s = (lv_[hi] - lv_[hi - 1]) / (lt_[hi] - lt_[hi - 1]);
    return std::exp(lv_[hi - 1] + s * (lt - lt_[hi - 1]));
  }

  // Inverse of the (monotone) tabulated function by bisection in log t.
  double inverse(double y) const {
    double lo = std::exp(lt_.front()) / 1e6, hi = std::exp(lt_.back()) * 1e6;
    const bool incr = lv_.back() > lv_.front();
    for (int i = 0; i < 200; ++i) {
      const double mid = std::sqrt(lo * hi);
      const bool below = incr ? (*this)(mid) < y : (*this)(mid) > y;
      (below ? lo : hi) = mid;
    }
    return std::sqrt(lo * hi);
  }

  double t_min() const { return std::exp(lt_.front()); }
  double t_max() const { return std::exp(lt_.back()); }

 private:
  std::vector<double> lt_, lv_;
};

struct NormalizerTable {
  ModelSpec spec;
  double alpha = 0.0;  // 0 when not supplied
  std::function<double(double)> tail;  // P{xi > t}, continuous version
  LogLogTable a;       // t P{xi > a(t)} = 1
  LogLogTable m;       // integral of the tail
  LogLogTable pi;      // m(a(t))
  LogLogTable pi_star; // de Bruijn conjugate of pi
  LogLogTable lambda_fn;  // asymptotic inverse of P{xi>s}^{-1/alpha}
  LogLogTable w_fn;       // asymptotic inverse of a(s pi*(s))^2
  LogLogTable kappa;      // asymptotic inverse of (s pi*(s))^{1/alpha}
  std::function<double(double)> c1, c2;

  double a_of(double t) const { return a(t); }
};

inline NormalizerTable build_normalizers(const ModelSpec& spec, double alpha = 0.0,
                                         double grid_min = 1.0, double grid_max = 1e9,
                                         std::size_t grid_n = 512) {
  NormalizerTable nt;
  nt.spec = spec;
  nt.alpha = alpha;
  const XiLaw xi = spec.xi;
  nt.tail = [xi](double t) { return xi.tail(t); };

  // a: exact numeric inverse of t -> 1 / P{xi > t}.
  nt.a = LogLogTable(grid_min, grid_max, grid_n,
                     [&xi](double t) { return xi.quantile_cont(1.0 / t); });

  // m(t) = int_0^t P{xi>u} du, cumulative log-grid trapezoid (tail = 1 on [0,1]).
  {
    std::vector<double> ts, ms;
    const std::size_t n = 4096;
    const double top = std::max(grid_max, xi.quantile_cont(1.0 / grid_max)) * 16.0;
    double acc = 1.0, prev_t = 1.0, prev_f = xi.tail(1.0);
    ts.push_back(1.0);
    ms.push_back(acc);
    for (std::size_t i = 1; i <= n; ++i) {
      const double t = std::exp(std::log(top) * static_cast<double>(i) / static_cast<double>(n));
      const double f = xi.tail(t);
      acc += 0.5 * (prev_f + f) * (t - prev_t);
      ts.push_back(t);
      ms.push_back(acc);
      prev_t = t;
      prev_f = f;
    }
    // pack into a LogLogTable via interpolation of the accumulated values
    auto ts_c = ts;
    auto ms_c = ms;
    nt.m = LogLogTable(1.0, top, 1024, [ts_c, ms_c](double t) {
      const auto it = std::lower_bound(ts_c.begin(), ts_c.end(), t);
      std::size_t hi = static_cast<std::size_t>(it - ts_c.begin());
      if (hi == 0) return ms_c.front();
      if (hi >= ts_c.size()) return ms_c.back();
      const double s = (t - ts_c[hi - 1]) / (ts_c[hi] - ts_c[hi - 1]);
      return ms_c[hi - 1] + s * (ms_c[hi] - ms_c[hi - 1]);
    });
  }

  auto a_tab = nt.a;
  auto m_tab = nt.m;
  nt.pi = LogLogTable(grid_min, grid_max, grid_n,
                      [a_tab, m_tab](double t) { return m_tab(a_tab(t)); });

  // de Bruijn conjugate: fixed point pi*_{k+1}(t) = 1 / pi(t pi*_k(t)).
  auto pi_tab = nt.pi;
  // Geometric-mean damping keeps the iteration contractive even when pi is
  // regularly varying with positive index (the plain map oscillates there).
  nt.pi_star = LogLogTable(grid_min, grid_max, grid_n, [pi_tab](double t) {
    double ps = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double next = std::sqrt(ps / pi_tab(t * ps));
      if (std::fabs(next / ps - 1.0) < 1e-13) {
        ps = next;
        break;
      }
      ps = next;
    }
    return ps;
  });

  if (alpha > 0.0) {
    nt.lambda_fn = LogLogTable(grid_min, grid_max, grid_n, [&xi, alpha](double s) {
      return xi.quantile_cont(std::pow(s, -alpha));
    });
  }

  const bool beta1 = xi.family == XiFamily::Pareto && xi.beta == 1.0;
  auto ps_tab = nt.pi_star;
  if (beta1) {
    auto fw = [a_tab, ps_tab](double s) {
      const double v = a_tab(s * ps_tab(s));
      return v * v;
    };
    // The inverse tables must be tabulated over the image of the forward
    // maps, not over the argument grid, or calls land in extrapolation.
    LogLogTable w_fwd(grid_min, grid_max, grid_n, fw);
    nt.w_fn = LogLogTable(fw(grid_min), fw(grid_max), grid_n,
                          [w_fwd](double t) { return w_fwd.inverse(t); });
    if (alpha > 0.0) {
      auto fk = [ps_tab, alpha](double s) { return std::pow(s * ps_tab(s), 1.0 / alpha); };
      LogLogTable k_fwd(grid_min, grid_max, grid_n, fk);
      nt.kappa = LogLogTable(fk(grid_min), fk(grid_max), grid_n,
                             [k_fwd](double t) { return k_fwd.inverse(t); });
    }
    nt.c1 = [a_tab, ps_tab](double t) { return a_tab(t * ps_tab(t)); };
    if (alpha > 0.0)
      nt.c2 = [ps_tab, alpha](double t) {
        return std::pow(t * ps_tab(t), 1.0 / alpha) / t;
      };
  } else {
    nt.c1 = [](double t) { return t; };
    if (alpha > 0.0)
      nt.c2 = [xi, alpha](double t) {
        return std::pow(xi.tail(t), -1.0 / alpha) / t;
      };
  }
  return nt;
}

// Exact positive beta-stable draw with E e^{-s sigma} = e^{-s^beta}.
inline double kanter_stable(double beta, Rng& rng) {
  const double u = rng.uniform();
  const double w = rng.exponential();
  const double pu = 3.14159265358979323846 * u;
  const double a = std::sin((1.0 - beta) * pu) *
                   std::pow(std::sin(beta * pu), beta / (1.0 - beta)) /
                   std::pow(std::sin(pu), 1.0 / (1.0 - beta));
  return std::pow(a / w, (1.0 - beta) / beta);
}

// Marginal at time t of the subordinator with Levy tail c x^{-beta}:
// scale (t c Gamma(1-beta))^{1/beta} times a standard Kanter draw.
inline double subordinator_marginal(double beta, double c, double t, Rng& rng) {
  if (t <= 0.0 || c <= 0.0) return 0.0;
  return std::pow(t * c * std::tgamma(1.0 - beta), 1.0 / beta) * kanter_stable(beta, rng);
}

// First passage time of the unit-tail beta-stable subordinator over
// level 1 (inverse subordinator at 1): sigma^{-beta} / Gamma(1-beta).
inline double inverse_subordinator_at_1(double beta, Rng& rng) {
  return std::pow(kanter_stable(beta, rng), -beta) / std::tgamma(1.0 - beta);
}

}  // namespace rwsre
