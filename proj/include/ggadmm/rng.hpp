#pragma once

#include <cmath>
#include <cstdint>

namespace ggadmm::rng {

// SplitMix64 finalizer. Full 64-bit avalanche, identical on every platform.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Order-sensitive key combiner.
inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2)));
}

// Top 53 bits -> [0, 1).
inline double to_unit(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

// Counter-based uniform stream: uniform(i) is a pure function of (key, i),
// so draws do not depend on evaluation order and distinct workers can draw
// concurrently without sharing state. Replays exactly for a given key.
class KeyedStream {
 public:
  explicit KeyedStream(std::uint64_t key) : key_(key) {}

  double uniform(std::uint64_t counter) const { return to_unit(splitmix64(mix(key_, counter))); }

  // Standard normal via Box-Muller; consumes the counter pair (2i, 2i+1).
  double normal(std::uint64_t counter) const {
    const double u1 = 1.0 - uniform(2 * counter);  // (0, 1]
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
};

// Stream keyed by (seed, a, b); e.g. (run seed, worker id, iteration).
inline KeyedStream stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return KeyedStream(mix(mix(seed, a), b));
}

}  // namespace ggadmm::rng
