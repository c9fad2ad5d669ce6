#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace ppsl {

// Deterministic random source. All draws are derived from the mt19937_64
// stream through fixed bit manipulations, so identical seeds reproduce
// identical sequences bit-for-bit on every platform (std::uniform_real_
// distribution and friends are implementation-defined and never used).
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random mantissa bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Integer in [0, n) without modulo bias (rejection sampling).
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = engine_();
    while (v >= limit) v = engine_();
    return v % n;
  }

  // Standard exponential via inverse CDF; uniform() < 1 keeps the log finite.
  double exponential() { return -std::log1p(-uniform()); }

  // Child stream for an independently consumable substream. Streams are
  // derived by hashing (seed, label) through splitmix64, so the parent's
  // own sequence is unaffected by how many children are split off.
  RandomSource split(std::string_view label) const {
    std::uint64_t h = seed_ ^ 0x9e3779b97f4a7c15ULL;
    for (char c : label) h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
    return RandomSource(splitmix64(h));
  }

 private:
  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace ppsl
