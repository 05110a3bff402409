#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace ginet {

// The engine is fully specified by the standard; the distributions below are
// written out so sequences match across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = n == 0 ? 0 : (~std::uint64_t{0} - n + 1) % n;
    for (;;) {
      const std::uint64_t x = engine_();
      if (x >= limit) return x % n;
    }
  }

 private:
  std::mt19937_64 engine_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view text, std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char ch : text) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

/// Stream seed for a named sub-task, e.g. (global seed, scene id).
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t salt = 0) {
  return splitmix64(splitmix64(seed ^ fnv1a(tag)) + salt);
}

}  // namespace ginet
