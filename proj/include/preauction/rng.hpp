#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace preauction {

/// SplitMix64 finalizer, used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for sub-stream `stream` of `master`. Streams never share state, so
/// consuming more draws in one stream cannot perturb another.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept
{
  return mix64(mix64(master) ^ mix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Explicit generator state passed to every stochastic operation.
///
/// Wraps std::mt19937_64, whose output sequence is fixed by the standard; the
/// real-valued draws are computed here rather than through <random>
/// distributions so that results are identical across standard libraries.
class Rng
{
public:
  explicit Rng(std::uint64_t seed = 0)
    : seed_(seed)
    , engine_(seed)
  {}

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double low, double high) { return low + (high - low) * uniform(); }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n)
  {
    // Lemire-style rejection keeps the draw unbiased.
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) {
        return r % n;
      }
    }
  }

  /// Standard normal via Box-Muller; the spare value is discarded so each call
  /// consumes exactly two uniforms.
  double normal()
  {
    double u1 = uniform();
    const double u2 = uniform();
    if (u1 < 1e-300) {
      u1 = 1e-300;
    }
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Rng fork(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

private:
  std::uint64_t   seed_;
  std::mt19937_64 engine_;
};

}  // namespace preauction
