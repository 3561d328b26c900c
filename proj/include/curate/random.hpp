#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

namespace curate {

inline constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Child seed for an independent, named stream (a category, a dataset, ...).
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) noexcept {
  return splitmix64(seed ^ splitmix64(fnv1a64(label)));
}

/// Seeded generator with bounded draws defined here rather than by the
/// standard library's distributions, whose output differs across vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    // Lemire's nearly-divisionless rejection method.
    std::uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    auto low = static_cast<std::uint64_t>(m);
    if (low < n) {
      const std::uint64_t threshold = (0 - n) % n;
      while (low < threshold) {
        x = next();
        m = static_cast<__uint128_t>(x) * n;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  /// Uniform real in [0, 1) with 53 bits of precision.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Incremental forward Fisher-Yates: step(i) fixes position i of a uniform
/// permutation. Drawing k steps yields a uniform k-subset in draw order.
class LazyShuffle {
 public:
  LazyShuffle(std::size_t n, Rng& rng) : perm_(n), rng_(rng) {
    std::iota(perm_.begin(), perm_.end(), std::size_t{0});
  }

  bool done() const { return pos_ >= perm_.size(); }

  std::size_t next() {
    const std::size_t remaining = perm_.size() - pos_;
    const std::size_t j = pos_ + static_cast<std::size_t>(rng_.below(remaining));
    std::swap(perm_[pos_], perm_[j]);
    return perm_[pos_++];
  }

 private:
  std::vector<std::size_t> perm_;
  std::size_t pos_ = 0;
  Rng& rng_;
};

/// k distinct indices from [0, n) in draw order.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k, Rng& rng) {
  std::vector<std::size_t> out;
  out.reserve(k < n ? k : n);
  LazyShuffle shuffle(n, rng);
  while (out.size() < k && !shuffle.done()) out.push_back(shuffle.next());
  return out;
}

/// ceil(rate * n) with a small guard against representation error
/// (0.05 * 100 must give 5, not 6).
inline std::size_t ceil_fraction(double rate, std::size_t n) {
  const double x = rate * static_cast<double>(n);
  return static_cast<std::size_t>(std::ceil(x - 1e-9));
}

}  // namespace curate
