#pragma once

#include "biopro/skew_normal.hpp"

#include <cstdint>

namespace biopro {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based random stream: draw i of stream s under seed k is a pure
/// function of (k, s, i), so independent purposes never share state.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform on the open interval (0, 1).
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box–Muller.
  double normal() noexcept;

  std::uint64_t counter() const noexcept { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Exact skew-normal draw: δ = α/√(1+α²), X = δ·|Z₀| + √(1−δ²)·Z₁, then
/// scaled by ω and shifted by ξ.
double sample_skew_normal(const SkewNormalParams& p, RandomStream& rng) noexcept;

}  // namespace biopro
