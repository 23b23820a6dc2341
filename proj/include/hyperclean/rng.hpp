#pragma once

#include <cstdint>
#include <random>

namespace hyperclean {

/// Seeded 64-bit generator shared by acceptance sampling and proposal schemes.
/// The uniform helpers avoid std::uniform_*_distribution so that streams are
/// bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in (0, 1]. Never returns 0, so `r <= exp(-inf)` is always false.
  double uniform_open_closed() {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

  /// Uniform integer in [0, n). n must be positive.
  std::size_t index(std::size_t n) {
    // Lemire's multiply-shift; the tiny bias is irrelevant for search.
    const auto wide = static_cast<unsigned __int128>(next()) * n;
    return static_cast<std::size_t>(wide >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finaliser, used to derive independent per-run seeds.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace hyperclean
