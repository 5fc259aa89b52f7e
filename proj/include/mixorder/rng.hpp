#pragma once

#include <cmath>
#include <cstdint>

namespace mixorder {

// Self-contained xoshiro256** generator with splitmix64 seeding.
// std::normal_distribution is implementation-defined, so the normal draw is
// done explicitly (Marsaglia polar) to keep streams reproducible everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& word : state_) word = splitmix64(x);
    has_spare_ = false;
  }

  static std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Deterministic child-stream derivation; independent of evaluation order.
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t x = seed ^ (0xA0761D6478BD642FULL * (index + 1));
    std::uint64_t a = splitmix64(x);
    std::uint64_t b = splitmix64(x);
    return a ^ (b >> 17);
  }

  Rng stream(std::uint64_t index) const { return Rng(derive(seed_tag_, index)); }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0,1) with 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

 private:
  explicit Rng() = default;

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  // Tag used only for stream() derivation; set on construction.
  std::uint64_t seed_tag_ = 0;
  std::uint64_t state_[4] = {};
  double spare_ = 0.0;
  bool has_spare_ = false;

  friend class RngSeedAccess;

 public:
  // Constructor variant recording the tag (primary entry point).
  static Rng seeded(std::uint64_t seed) {
    Rng r(seed);
    r.seed_tag_ = seed;
    return r;
  }
};

inline Rng make_rng(std::uint64_t seed) { return Rng::seeded(seed); }

inline Rng make_stream(std::uint64_t seed, std::uint64_t index) {
  return Rng::seeded(Rng::derive(seed, index));
}

inline Rng make_stream(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
  return Rng::seeded(Rng::derive(Rng::derive(seed, i), j));
}

}  // namespace mixorder
