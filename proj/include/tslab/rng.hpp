#ifndef TSLAB_RNG_HPP
#define TSLAB_RNG_HPP

#include <cmath>
#include <cstdint>

namespace tslab {

// SplitMix64 keyed streams. Streams are derived counter-style from a
// (master seed, stream index) pair, so replicate k always sees the same
// stream no matter which thread runs it or in what order.
struct SplitMix64 {
  using result_type = std::uint64_t;
  std::uint64_t state = 0;

  SplitMix64() = default;
  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~std::uint64_t{0}; }

  std::uint64_t operator()() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
};

// Stateless finalizer used for stream derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 33;
  z *= 0xff51afd7ed558ccdull;
  z ^= z >> 33;
  z *= 0xc4ceb9fe1a85ec53ull;
  z ^= z >> 33;
  return z;
}

// Seed-derivation rule "splitmix64-v1" recorded in seed ledgers.
inline std::uint64_t derive_stream(std::uint64_t master, std::uint64_t index) {
  return mix64(master ^ mix64(index * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull));
}

inline constexpr const char* kSeedRuleVersion = "splitmix64-v1";

// Uniform on [0,1) with 53 random bits.
inline double uniform01(SplitMix64& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller. Uncached: two uniforms per draw, so the
// stream position after n draws never depends on call-site interleaving.
inline double standard_normal(SplitMix64& g) {
  double u1 = 1.0 - uniform01(g);  // (0,1]
  double u2 = uniform01(g);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
}

}  // namespace tslab

#endif  // TSLAB_RNG_HPP
