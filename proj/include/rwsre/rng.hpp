#pragma once

// Counter-based seeding and a fast 64-bit generator (xoshiro256**).
// Streams are derived by keyed hashing so that replica / environment
// draws are reproducible independently of thread schedule.

#include <cstdint>
#include <cmath>
#include <limits>
#include <random>

namespace rwsre {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Keyed mix of up to four 64-bit words into one. Collision-free enough
// for stream derivation (verified by smoke tests).
inline std::uint64_t mix_key(std::uint64_t a, std::uint64_t b = 0,
                             std::uint64_t c = 0, std::uint64_t d = 0) {
  std::uint64_t s = a;
  std::uint64_t h = splitmix64(s);
  s ^= b + 0x632be59bd9b4e019ULL;
  h ^= splitmix64(s);
  s ^= c + 0x2545f4914f6cdd1dULL;
  h ^= splitmix64(s);
  s ^= d + 0x9e6c63d0876a9a47ULL;
  h ^= splitmix64(s);
  return h;
}

class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

  void reseed(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
    bit_count_ = 0;
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<std::uint64_t>::max();
  }

  result_type operator()() { return next(); }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in (0,1); never returns 0 or 1.
  double uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential() { return -std::log(uniform()); }

  // +1 / -1 step, consuming one bit of a cached word.
  int pm_step() {
    if (bit_count_ == 0) {
      bit_word_ = next();
      bit_count_ = 64;
    }
    const int s = static_cast<int>(bit_word_ & 1u) * 2 - 1;
    bit_word_ >>= 1;
    --bit_count_;
    return s;
  }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    if (have_cached_normal_) {
      have_cached_normal_ = false;
      return cached_normal_;
    }
    // Marsaglia polar method.
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    cached_normal_ = v * f;
    have_cached_normal_ = true;
    return u * f;
  }

  // Geometric on {0,1,2,...} with success probability p: P{k} = p(1-p)^k.
  std::uint64_t geometric(double p) {
    if (p >= 1.0) return 0;
    const double g = std::floor(std::log(uniform()) / std::log1p(-p));
    return static_cast<std::uint64_t>(g);
  }

  // Marsaglia-Tsang; shape > 0, unit scale.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 10.0) {
      // Inversion by sequential search.
      const double limit = std::exp(-mean);
      double prod = uniform();
      std::uint64_t k = 0;
      while (prod > limit) {
        prod *= uniform();
        ++k;
      }
      return k;
    }
    // Hoermann's PTRS transformed rejection: exact, O(1), and much faster
    // than the library sampler, which re-derives its constants per call.
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
      const double u = uniform() - 0.5;
      const double v = uniform();
      const double us = 0.5 - std::fabs(u);
      const double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
      if (us >= 0.07 && v <= v_r) return static_cast<std::uint64_t>(kf);
      if (kf < 0.0 || (us < 0.013 && v > us)) continue;
      if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
          kf * log_mean - mean - std::lgamma(kf + 1.0))
        return static_cast<std::uint64_t>(kf);
    }
  }

  std::uint64_t binomial(std::uint64_t n, double p) {
    if (n == 0) return 0;
    if (n > (1ULL << 40)) {
      // Normal limit; the distributional error is far below any tolerance
      // used at these block sizes.
      const double mean = static_cast<double>(n) * p;
      const double sd = std::sqrt(mean * (1.0 - p));
      double v = std::floor(mean + sd * normal() + 0.5);
      if (v < 0.0) v = 0.0;
      if (v > static_cast<double>(n)) v = static_cast<double>(n);
      return static_cast<std::uint64_t>(v);
    }
    std::binomial_distribution<std::uint64_t> dist(n, p);
    return dist(*this);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4]{};
  std::uint64_t bit_word_ = 0;
  int bit_count_ = 0;
  double cached_normal_ = 0.0;
  bool have_cached_normal_ = false;
};

// Deterministic stream for (master_seed, scenario, n, replica) tuples.
inline Rng derive_stream(std::uint64_t master_seed, std::uint64_t scenario_tag,
                         std::uint64_t n, std::uint64_t replica) {
  return Rng(mix_key(master_seed, scenario_tag, n, replica));
}

}  // namespace rwsre
