#pragma once

// Seeded randomness. One 64-bit experiment seed fans out into independent
// streams through SplitMix64(seed ^ mix(stream_id)); uniforms are built from
// the top 53 bits so draws are identical across standard libraries.

#include <cmath>
#include <cstdint>
#include <random>

#include "qpt/lattice.hpp"

namespace qpt {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : engine_(derive_seed(seed, stream)) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal by Box–Muller.
  double normal() {
    double u = uniform();
    while (u == 0.0) u = uniform();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(kTwoPi * uniform());
  }
  cplx complex_normal() {
    const double re = normal();
    return {re, normal()};
  }

  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace qpt
