#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace breakscope {

// SplitMix64 step, used both as a stream seeder and as a cheap hash.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-style seed derivation: hash(base, part1, part2, ...).  Adding new
// parts on the end never perturbs streams derived from shorter tuples.
inline std::uint64_t seed_hash(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t state = 0x8f1bbcdcbfa53e0bULL;
  for (std::uint64_t p : parts) {
    state ^= p + 0x9e3779b97f4a7c15ULL + (state << 6) + (state >> 2);
    splitmix64(state);
  }
  return splitmix64(state);
}

// Seeded random stream with self-contained samplers.  The standard library
// leaves distribution algorithms implementation-defined, which would break
// the byte-identical reproducibility contract across toolchains, so the
// transformations are spelled out here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    // Expand the 64-bit seed so nearby seeds do not share engine state.
    std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(s)),
                      static_cast<std::uint32_t>(splitmix64(s) >> 32),
                      static_cast<std::uint32_t>(splitmix64(s)),
                      static_cast<std::uint32_t>(splitmix64(s) >> 32)};
    engine_.seed(seq);
  }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0, 1], safe as a log argument.
  double uniform_pos() { return 1.0 - uniform(); }

  // Uniform integer on [lo, hi] inclusive, by rejection (unbiased).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());  // full range
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t draw;
    do {
      draw = engine_();
    } while (draw >= limit);
    return lo + static_cast<std::int64_t>(draw % span);
  }

  // Standard normal via Box-Muller (no spare caching).
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Gamma(shape, scale=1) via Marsaglia-Tsang; boosting for shape < 1.
  double gamma(double shape) {
    if (shape < 1.0) {
      const double u = uniform_pos();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
  }

  // InverseGamma(shape, scale) with density proportional to
  // x^{-shape-1} exp(-scale/x).
  double inverse_gamma(double shape, double scale) {
    return scale / gamma(shape);
  }

  // Geometric number of trials until first success, support {1, 2, ...},
  // P(G = k) = p (1-p)^{k-1}.  Sampled by inversion.
  std::int64_t geometric(double p) {
    const double u = uniform_pos();
    const double g = std::ceil(std::log(u) / std::log1p(-p));
    return g < 1.0 ? 1 : static_cast<std::int64_t>(g);
  }

 private:
  static constexpr double kPi = 3.141592653589793238462643383279502884;
  std::mt19937_64 engine_;
};

}  // namespace breakscope
