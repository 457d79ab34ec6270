#pragma once

// Empirical-distribution machinery: ECDF, exact KS distance, Hill
// estimator with bootstrap CI, ratio-based tail-constant estimation,
// Laplace-transform checks.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "rwsre/rng.hpp"

namespace rwsre {

class Ecdf {
 public:
  explicit Ecdf(std::vector<double> sample) : xs_(std::move(sample)) {
    if (xs_.empty()) throw std::invalid_argument("empty sample");
    std::sort(xs_.begin(), xs_.end());
  }

  // Right-continuous evaluation.
  double operator()(double x) const {
    const auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    return static_cast<double>(it - xs_.begin()) / static_cast<double>(xs_.size());
  }

  const std::vector<double>& sorted() const { return xs_; }
  std::size_t size() const { return xs_.size(); }

 private:
  std::vector<double> xs_;
};

// Exact sup-gap over the merged jump points of two ECDFs.
inline double ks_distance(const Ecdf& a, const Ecdf& b) {
  const auto& xa = a.sorted();
  const auto& xb = b.sorted();
  const double na = static_cast<double>(xa.size()), nb = static_cast<double>(xb.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < xa.size() || j < xb.size()) {
    double x;
    if (j >= xb.size() || (i < xa.size() && xa[i] <= xb[j]))
      x = xa[i];
    else
      x = xb[j];
    while (i < xa.size() && xa[i] == x) ++i;
    while (j < xb.size() && xb[j] == x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

// Exact sup-gap between an ECDF and a continuous CDF.
inline double ks_distance(const Ecdf& a, const std::function<double(double)>& cdf) {
  const auto& xs = a.sorted();
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
    d = std::max(d, std::fabs(static_cast<double>(i) / n - f));
  }
  return d;
}

struct HillResult {
  double index;
  double ci_low;
  double ci_high;
  std::size_t k;
};

// Hill estimator: reciprocal mean log-excess over the (k+1)-th order
// statistic. Default k = round(n^0.6). The CI bootstraps the k top
// log-excesses (200 resamples), which is O(k) per resample.
inline HillResult hill_estimator(std::vector<double> sample, std::size_t k = 0,
                                 std::uint64_t boot_seed = 99) {
  const std::size_t n = sample.size();
  if (n < 8) throw std::invalid_argument("sample too small for Hill");
  if (k == 0) k = static_cast<std::size_t>(std::llround(std::pow(static_cast<double>(n), 0.6)));
  if (k >= n / 2) throw std::invalid_argument("hill k must be < n/2");
  for (double v : sample)
    if (!(v > 0.0)) throw std::invalid_argument("hill requires positive sample");
  std::nth_element(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(k),
                   sample.end(), std::greater<double>());
  std::vector<double> excess(k);
  const double x_k1 = *std::max_element(sample.begin() + static_cast<std::ptrdiff_t>(k),
                                        sample.end());
  double mean = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    excess[i] = std::log(sample[i] / x_k1);
    mean += excess[i];
  }
  mean /= static_cast<double>(k);
  if (!(mean > 0.0)) throw std::invalid_argument("degenerate (constant) sample");
  const double index = 1.0 / mean;

  Rng rng(mix_key(boot_seed, 0x484f4f54ULL));
  std::vector<double> boot(200);
  for (auto& bval : boot) {
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i)
      s += excess[rng.next() % k];
    bval = static_cast<double>(k) / s;
  }
  std::sort(boot.begin(), boot.end());
  return {index, boot[4], boot[194], k};
}

struct RatioTailResult {
  double plateau;        // median of the per-grid-point ratios
  double flatness;       // max relative deviation from the plateau
  bool insufficient;     // fewer than 100 exceedances at some grid point
  std::vector<std::pair<double, double>> points;  // (t, ratio)
};

inline RatioTailResult ratio_tail_estimate(const std::vector<double>& sample,
                                           const std::function<double(double)>& ref_tail,
                                           const std::vector<double>& t_grid) {
  std::vector<double> sorted(sample);
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  RatioTailResult out{0.0, 0.0, false, {}};
  std::vector<double> ratios;
  for (double t : t_grid) {
    const auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
    const double exceed = static_cast<double>(sorted.end() - it);
    if (exceed < 100.0) {
      out.insufficient = true;
      continue;
    }
    const double r = (exceed / n) / ref_tail(t);
    ratios.push_back(r);
    out.points.emplace_back(t, r);
  }
  if (ratios.empty()) {
    out.insufficient = true;
    return out;
  }
  std::vector<double> med(ratios);
  std::nth_element(med.begin(), med.begin() + static_cast<std::ptrdiff_t>(med.size() / 2),
                   med.end());
  out.plateau = med[med.size() / 2];
  for (double r : ratios)
    out.flatness = std::max(out.flatness, std::fabs(r / out.plateau - 1.0));
  return out;
}

// max_s |mean e^{-sX} - target(s)|
inline double laplace_gap(const std::vector<double>& sample,
                          const std::function<double(double)>& target,
                          const std::vector<double>& s_grid) {
  double gap = 0.0;
  for (double s : s_grid) {
    double m = 0.0;
    for (double x : sample) m += std::exp(-s * x);
    m /= static_cast<double>(sample.size());
    gap = std::max(gap, std::fabs(m - target(s)));
  }
  return gap;
}

inline double sample_mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double sample_moment(const std::vector<double>& v, double p) {
  double s = 0.0;
  for (double x : v) s += std::pow(x, p);
  return s / static_cast<double>(v.size());
}

}  // namespace rwsre
