#pragma once

#include <span>

namespace biopro {

/// Azzalini skew-normal SN(ξ, ω, α):
///   pdf(x) = (2/ω)·φ(z)·Φ(α·z),  z = (x − ξ)/ω.
struct SkewNormalParams {
  double location = 0.0;  // ξ
  double scale = 1.0;     // ω > 0
  double shape = 0.0;     // α

  void validate() const;

  friend bool operator==(const SkewNormalParams&, const SkewNormalParams&) = default;
};

double normal_pdf(double z) noexcept;
double normal_cdf(double z) noexcept;
// log Φ(z), accurate far into the lower tail.
double log_normal_cdf(double z) noexcept;

double pdf(const SkewNormalParams& p, double x) noexcept;
double log_pdf(const SkewNormalParams& p, double x) noexcept;
/// d/dx pdf(x).
double pdf_derivative(const SkewNormalParams& p, double x) noexcept;
/// Φ(z) − 2·T(z, α) with Owen's T.
double cdf(const SkewNormalParams& p, double x);

double mean(const SkewNormalParams& p) noexcept;
double variance(const SkewNormalParams& p) noexcept;
double skewness(const SkewNormalParams& p) noexcept;
/// Numerically located mode (the density is log-concave).
double mode(const SkewNormalParams& p);

double log_likelihood(const SkewNormalParams& p, std::span<const double> samples) noexcept;

/// Method-of-moments estimate. Sample skewness is clamped just inside the
/// attainable range (|γ| < 0.9953).
SkewNormalParams moment_estimate(std::span<const double> samples);

struct SkewNormalFit {
  SkewNormalParams params;
  SkewNormalParams initial;
  double log_likelihood = 0.0;
  double initial_log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Maximum likelihood over (ξ, log ω, α) by Nelder–Mead, started from the
/// moment estimate. Needs at least 8 samples that are not all equal.
SkewNormalFit fit_skew_normal_detailed(std::span<const double> samples);
SkewNormalParams fit_skew_normal(std::span<const double> samples);

inline constexpr std::size_t kMinSkewNormalSamples = 8;

}  // namespace biopro
