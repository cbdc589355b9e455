#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace procache {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable 64-bit string hash (FNV-1a), used to mix names into seeds.
inline std::uint64_t hash64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives a child seed from a base seed and a sequence of stream labels.
// Mixing is order sensitive, so derive_seed(s, {1, 2}) != derive_seed(s, {2, 1}).
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = splitmix64(base);
  for (std::uint64_t p : parts) h = splitmix64(h ^ p);
  return h;
}

// Seeded random stream with explicit, implementation-pinned draw routines.
// std::*_distribution is deliberately avoided: its output is not specified
// bit-for-bit, and trajectories must replay identically from a seed.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [lo, hi], inclusive, unbiased (masked rejection).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const std::uint64_t range = static_cast<std::uint64_t>(hi - lo);
    if (range == 0) return lo;
    std::uint64_t mask = ~std::uint64_t{0} >> std::countl_zero(range);
    std::uint64_t v = next_u64() & mask;
    while (v > range) v = next_u64() & mask;
    return lo + static_cast<std::int64_t>(v);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  // Box-Muller, cosine branch only, so one call consumes exactly two draws.
  double normal(double mu = 0.0, double sigma = 1.0) {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    return mu + sigma * z;
  }

  // Zero-mean normal conditioned on |x| <= clip_sigmas * sigma.
  double truncated_normal(double sigma, double clip_sigmas) {
    if (sigma == 0.0) return 0.0;
    const double bound = clip_sigmas * sigma;
    double x = normal(0.0, sigma);
    while (std::fabs(x) > bound) x = normal(0.0, sigma);
    return x;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace procache
