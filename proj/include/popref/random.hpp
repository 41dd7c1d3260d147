#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace popref {

// splitmix64 finalizer. Used everywhere a sub-seed is derived from a master
// seed, so that results do not depend on which thread does the work.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Sub-seed for stream `index` of master seed `seed` (per-tree seeds,
// per-stage seeds, per-sweep-entry seeds).
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(seed ^ index);
}

// Thin deterministic wrapper around mt19937_64. The std distributions are
// implementation-defined, so draws are derived from raw engine output only.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform integer in [0, n). n must be > 0.
  std::uint64_t next_below(std::uint64_t n) { return engine_() % n; }

  // Uniform double in [0, 1).
  double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform double in [lo, hi).
  double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

  // Standard normal via Box-Muller; never passes 0 to log.
  double next_normal() {
    double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  bool next_bool(double p_true) { return next_unit() < p_true; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace popref
