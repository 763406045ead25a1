#pragma once

#include <cstddef>
#include <cstdint>
#include <span>

namespace biopro {

inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

// 64-bit FNV-1a. Pass a previous result as `seed` to continue a running hash.
constexpr std::uint64_t fnv1a64(std::span<const std::byte> bytes,
                                std::uint64_t seed = kFnvOffsetBasis) noexcept {
  std::uint64_t h = seed;
  for (auto b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace biopro
