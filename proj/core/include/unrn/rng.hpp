#pragma once

#include <cmath>
#include <cstdint>

namespace unrn {

// SplitMix64 step (Steele/Lea/Flood). Used for seed expansion and for
// deriving independent stream seeds from (seed, tag...) tuples.
inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Hashes a seed with up to three stream tags. Every generator in the code
// base gets its seed through this, so adding a consumer never shifts the
// draws of an existing one.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a = 0,
                              std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = seed;
  std::uint64_t h = splitmix64_next(s);
  s ^= a * 0x9E3779B97F4A7C15ULL;
  h ^= splitmix64_next(s);
  s ^= b * 0xC2B2AE3D27D4EB4FULL;
  h ^= splitmix64_next(s);
  s ^= c * 0x165667B19E3779F9ULL;
  h ^= splitmix64_next(s);
  return h;
}

// xoshiro256++ 1.0 (Blackman/Vigna). The standard library engines and
// distributions are not bit-reproducible across implementations, which this
// project requires, so the generator and the transforms are spelled out.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) word = splitmix64_next(sm);
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform on [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer on [0, n). n must be positive. Rejection-free modulo is
  // fine here: n is tiny against 2^64 so the bias is far below any tolerance
  // used in this project, and the draws stay platform-identical.
  std::uint64_t uniform_index(std::uint64_t n) { return next() % n; }

  // Standard normal via Box-Muller on the generator's own uniforms. Both
  // values of each pair are used, so one draw consumes exactly two uniforms
  // every other call.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace unrn
