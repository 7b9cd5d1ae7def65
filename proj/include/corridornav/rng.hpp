#pragma once

#include <cmath>
#include <cstdint>

namespace corridornav {

// splitmix64, used both as a standalone hash and to expand seeds.
inline uint64_t hash64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t hash64(uint64_t a, uint64_t b) { return hash64(a ^ hash64(b)); }
inline uint64_t hash64(uint64_t a, uint64_t b, uint64_t c) { return hash64(hash64(a, b) ^ hash64(c)); }
inline uint64_t hash64(uint64_t a, uint64_t b, uint64_t c, uint64_t d) { return hash64(hash64(a, b, c) ^ hash64(d)); }

// Stateless hash -> [0,1). Used by the procedural textures.
inline double hash01(uint64_t a, uint64_t b, uint64_t c, uint64_t d) {
  return static_cast<double>(hash64(a, b, c, d) >> 11) * 0x1.0p-53;
}

// Deterministic RNG with explicit gaussian sampling. std::*_distribution is
// implementation-defined, so draws are produced by hand from raw 64-bit words.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed ? seed : 0x4d595df4d0f33173ULL) {}

  uint64_t next_u64() {
    // xorshift64* on a splitmix-expanded state
    state_ = hash64(state_);
    return state_;
  }

  // uniform in [0,1)
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // index in [0, n)
  uint64_t below(uint64_t n) { return next_u64() % n; }

  // Box-Muller, one value per call (the sine twin is discarded).
  double gaussian(double mean, double stddev) {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 < 1e-300) u1 = 1e-300;
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return mean + stddev * z;
  }

 private:
  uint64_t state_;
};

}  // namespace corridornav
