#pragma once

// Lazily realized two-sided sparse environment. Mark k carries (xi_k,
// lambda_k); S_0 = 0, S_k - S_{k-1} = xi_k for all k in Z. Each mark is
// drawn from a counter-based stream keyed by (seed, k), so extending a
// window never changes previously realized marks and windows are
// order-independent.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rwsre/model.hpp"
#include "rwsre/rng.hpp"

namespace rwsre {

struct Mark {
  std::int64_t xi;
  double lambda;
};

class EnvBlock {
 public:
  EnvBlock(ModelSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {
    spec_.validate();
  }

  const ModelSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }

  // Mark k for any k in Z (k == 0 belongs to the negative side: S_{-1} = -xi_0).
  const Mark& mark(std::int64_t k) {
    if (k >= 1) {
      while (static_cast<std::int64_t>(up_.size()) < k) grow_up();
      return up_[static_cast<std::size_t>(k - 1)];
    }
    while (static_cast<std::int64_t>(down_.size()) < 1 - k) grow_down();
    return down_[static_cast<std::size_t>(-k)];
  }

  std::int64_t S(std::int64_t k) {
    if (k >= 0) {
      while (static_cast<std::int64_t>(up_.size()) < k) grow_up();
      return k == 0 ? 0 : s_up_[static_cast<std::size_t>(k - 1)];
    }
    while (static_cast<std::int64_t>(down_.size()) < -k) grow_down();
    return s_down_[static_cast<std::size_t>(-k - 1)];
  }

  // Largest k with S_k <= site (site may be negative).
  std::int64_t mark_index_at_or_below(std::int64_t site) {
    if (site >= 0) {
      while (upper_span() <= site) grow_up();
      // binary search in s_up_ (S_1..): count of S_k <= site, k >= 1
      std::size_t lo = 0, hi = s_up_.size();
      while (lo < hi) {
        const std::size_t mid = (lo + hi) / 2;
        if (s_up_[mid] <= site)
          lo = mid + 1;
        else
          hi = mid;
      }
      return static_cast<std::int64_t>(lo);  // 0 means S_0 = 0 is the floor
    }
    while (lower_span() > site) grow_down();
    // s_down_[j] = S_{-1-j}, decreasing in j; find smallest j with S_{-1-j} <= site
    std::size_t lo = 0, hi = s_down_.size();
    while (lo < hi) {
      const std::size_t mid = (lo + hi) / 2;
      if (s_down_[mid] > site)
        lo = mid + 1;
      else
        hi = mid;
    }
    if (lo == s_down_.size()) throw std::logic_error("env window not extended");
    return -1 - static_cast<std::int64_t>(lo);
  }

  bool is_marked(std::int64_t site) { return S(mark_index_at_or_below(site)) == site; }

  // omega_n: lambda_{k+1} when n = S_k, 1/2 otherwise.
  double omega_at(std::int64_t site) {
    const std::int64_t k = mark_index_at_or_below(site);
    if (S(k) == site) return mark(k + 1).lambda;
    return 0.5;
  }

  // nu(t) = inf{ k >= 1 : S_k > t } for t >= 0.
  std::int64_t nu_of(std::int64_t t) {
    std::int64_t k = mark_index_at_or_below(t);
    return (k < 1 ? 0 : k) + 1;
  }

  std::int64_t upper_span() const { return s_up_.empty() ? 0 : s_up_.back(); }
  std::int64_t lower_span() const { return s_down_.empty() ? 0 : s_down_.back(); }
  std::int64_t realized_up() const { return static_cast<std::int64_t>(up_.size()); }
  std::int64_t realized_down() const { return static_cast<std::int64_t>(down_.size()); }

 private:
  Mark draw(std::int64_t k) const {
    Rng g(mix_key(seed_, 0x454e564dULL, static_cast<std::uint64_t>(k)));
    auto [xi, lambda] = spec_.sample_mark(g);
    return {xi, lambda};
  }

  void grow_up() {
    const std::int64_t k = static_cast<std::int64_t>(up_.size()) + 1;
    up_.push_back(draw(k));
    s_up_.push_back((s_up_.empty() ? 0 : s_up_.back()) + up_.back().xi);
  }

  void grow_down() {
    const std::int64_t k = -static_cast<std::int64_t>(down_.size());
    down_.push_back(draw(k));
    // S_{k-1} = S_k - xi_k
    const std::int64_t s_k = down_.size() == 1 ? 0 : s_down_.back();
    s_down_.push_back(s_k - down_.back().xi);
  }

  ModelSpec spec_;
  std::uint64_t seed_;
  std::vector<Mark> up_;             // marks k = 1, 2, ...
  std::vector<std::int64_t> s_up_;   // S_1, S_2, ...
  std::vector<Mark> down_;           // marks k = 0, -1, -2, ...
  std::vector<std::int64_t> s_down_; // S_{-1}, S_{-2}, ...
};

}  // namespace rwsre
