#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ccrl {

// Counter-based generator: every draw is a pure function of
// (seed, stream, counter), so the order in which entities are generated
// never changes their values.
class CounterRng {
public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream))) {}

  static constexpr std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  constexpr std::uint64_t bits(std::uint64_t counter) const { return mix(key_ ^ mix(counter)); }

  // Uniform in (0, 1).
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller over two derived counters.
  double normal(std::uint64_t counter) const {
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

private:
  std::uint64_t key_;
};

// Packs up to four small indices into one counter value.
constexpr std::uint64_t counter_of(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0,
                                   std::uint64_t d = 0) {
  return CounterRng::mix(CounterRng::mix(CounterRng::mix(a) ^ b) ^ c) ^ d;
}

}  // namespace ccrl
