#pragma once

#include <cmath>
#include <cstdint>

#include "qcare/linalg.hpp"

namespace qcare {

// Small deterministic generator (splitmix64 core). Avoids the standard
// library distributions so that streams are identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed + 0x9e3779b97f4a7c15ull) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (no caching, two uniforms per draw).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Complex normal_complex() {
    const double re = normal();
    const double im = normal();
    return Complex(re, im) / std::sqrt(2.0);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Deterministic per-stream seed derivation from a master seed.
  static std::uint64_t child_seed(std::uint64_t master, std::uint64_t stream) {
    Rng mix(master ^ (0xd1342543de82ef95ull * (stream + 1)));
    return mix.next_u64();
  }

 private:
  std::uint64_t state_;
};

}  // namespace qcare
