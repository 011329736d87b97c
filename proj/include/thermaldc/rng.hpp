#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace thermaldc {

/// SplitMix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Named random streams of a simulation replica.
enum class Stream : std::uint64_t { arrivals = 1, fans = 2, workload_size = 3, scale = 4, init = 5 };

/// Deterministic random source. The engine (mt19937_64) has a standardized
/// output sequence, and the distributions below are written out by hand so
/// results do not depend on the standard library's distribution classes.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  Rng(std::uint64_t seed, Stream stream)
      : engine_(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(stream)))) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in the closed interval [lo, hi].
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740991.0);
    return lo + (hi - lo) * u;
  }

  /// Uniform integer in [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
  }

  /// Poisson draw by sequential-search inversion of the CDF. Large means are
  /// split into chunks so exp(-lambda) never underflows.
  std::uint64_t poisson(double lambda) {
    if (!(lambda > 0.0)) return 0;
    constexpr double chunk = 256.0;
    std::uint64_t total = 0;
    while (lambda > chunk) {
      total += poisson_small(chunk);
      lambda -= chunk;
    }
    return total + poisson_small(lambda);
  }

private:
  std::uint64_t poisson_small(double lambda) {
    const double u = uniform01();
    double p = std::exp(-lambda);
    double cdf = p;
    std::uint64_t k = 0;
    while (u > cdf) {
      ++k;
      p *= lambda / static_cast<double>(k);
      cdf += p;
      if (p <= 0.0) break;
    }
    return k;
  }

  std::mt19937_64 engine_;
};

} // namespace thermaldc
