#include "biopro/rng.hpp"

#include <cmath>
#include <numbers>

namespace biopro {

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id) noexcept
    : key_(splitmix64(seed ^ splitmix64(stream_id + 0x632be59bd9b4e019ULL))) {}

std::uint64_t RandomStream::next_u64() noexcept {
  return splitmix64(key_ + 0x9e3779b97f4a7c15ULL * counter_++);
}

double RandomStream::uniform() noexcept {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RandomStream::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double r = std::sqrt(-2.0 * std::log(uniform()));
  const double theta = 2.0 * std::numbers::pi * uniform();
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

double sample_skew_normal(const SkewNormalParams& p, RandomStream& rng) noexcept {
  const double delta = p.shape / std::sqrt(1.0 + p.shape * p.shape);
  const double z0 = rng.normal();
  const double z1 = rng.normal();
  const double x = delta * std::abs(z0) + std::sqrt(1.0 - delta * delta) * z1;
  return p.location + p.scale * x;
}

}  // namespace biopro
