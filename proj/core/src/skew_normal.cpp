#include "biopro/skew_normal.hpp"

#include "biopro/error.hpp"
#include "biopro/nelder_mead.hpp"

#include <boost/math/special_functions/owens_t.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace biopro {
namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;  // 1/√(2π)
constexpr double kLogSqrt2Pi = 0.9189385332046727;  // log √(2π)
constexpr double kMaxSkewness = 0.9952717464311565;

}  // namespace

void SkewNormalParams::validate() const {
  if (!std::isfinite(location) || !std::isfinite(scale) || !std::isfinite(shape)) {
    fail(ErrorCode::kNonFinite, "skew-normal parameters must be finite");
  }
  if (!(scale > 0.0)) fail(ErrorCode::kValidation, "skew-normal scale must be positive");
}

double normal_pdf(double z) noexcept { return kInvSqrt2Pi * std::exp(-0.5 * z * z); }

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z * std::numbers::sqrt2 / 2.0); }

double log_normal_cdf(double z) noexcept {
  if (z > -35.0) return std::log(normal_cdf(z));
  // Mills-ratio asymptotic series for the far lower tail.
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2);
  return -0.5 * z2 - kLogSqrt2Pi - std::log(-z) + std::log(series);
}

double pdf(const SkewNormalParams& p, double x) noexcept {
  const double z = (x - p.location) / p.scale;
  return 2.0 / p.scale * normal_pdf(z) * normal_cdf(p.shape * z);
}

double log_pdf(const SkewNormalParams& p, double x) noexcept {
  const double z = (x - p.location) / p.scale;
  return std::numbers::ln2 - std::log(p.scale) - 0.5 * z * z - kLogSqrt2Pi +
         log_normal_cdf(p.shape * z);
}

double pdf_derivative(const SkewNormalParams& p, double x) noexcept {
  const double z = (x - p.location) / p.scale;
  const double az = p.shape * z;
  const double phi = normal_pdf(z);
  return 2.0 / (p.scale * p.scale) * phi * (p.shape * normal_pdf(az) - z * normal_cdf(az));
}

double cdf(const SkewNormalParams& p, double x) {
  const double z = (x - p.location) / p.scale;
  const double value = normal_cdf(z) - 2.0 * boost::math::owens_t(z, p.shape);
  return std::clamp(value, 0.0, 1.0);
}

double mean(const SkewNormalParams& p) noexcept {
  const double delta = p.shape / std::sqrt(1.0 + p.shape * p.shape);
  return p.location + p.scale * delta * std::sqrt(2.0 / std::numbers::pi);
}

double variance(const SkewNormalParams& p) noexcept {
  const double delta = p.shape / std::sqrt(1.0 + p.shape * p.shape);
  return p.scale * p.scale * (1.0 - 2.0 * delta * delta / std::numbers::pi);
}

double skewness(const SkewNormalParams& p) noexcept {
  const double delta = p.shape / std::sqrt(1.0 + p.shape * p.shape);
  const double m = delta * std::sqrt(2.0 / std::numbers::pi);
  return (4.0 - std::numbers::pi) / 2.0 * m * m * m / std::pow(1.0 - m * m, 1.5);
}

double mode(const SkewNormalParams& p) {
  p.validate();
  // Unimodal: bisect on the sign of the density slope.
  double lo = p.location - 2.0 * p.scale;
  double hi = p.location + 2.0 * p.scale;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (pdf_derivative(p, mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double log_likelihood(const SkewNormalParams& p, std::span<const double> samples) noexcept {
  double total = 0.0;
  for (double x : samples) total += log_pdf(p, x);
  return total;
}

SkewNormalParams moment_estimate(std::span<const double> samples) {
  if (samples.size() < 3) fail(ErrorCode::kInsufficientData, "moment estimate needs 3 samples");
  const double n = static_cast<double>(samples.size());
  double m = 0.0;
  for (double x : samples) m += x;
  m /= n;
  double m2 = 0.0;
  double m3 = 0.0;
  for (double x : samples) {
    const double c = x - m;
    m2 += c * c;
    m3 += c * c * c;
  }
  m2 /= n;
  m3 /= n;
  if (!(m2 > 0.0)) fail(ErrorCode::kDegenerate, "samples have zero variance");

  const double limit = 0.99 * kMaxSkewness;
  const double gamma = std::clamp(m3 / std::pow(m2, 1.5), -limit, limit);
  const double a = std::pow(std::abs(gamma), 2.0 / 3.0);
  const double b = std::pow((4.0 - std::numbers::pi) / 2.0, 2.0 / 3.0);
  const double delta = std::copysign(std::sqrt(std::numbers::pi / 2.0 * a / (a + b)), gamma);

  SkewNormalParams out;
  out.shape = delta / std::sqrt(1.0 - delta * delta);
  out.scale = std::sqrt(m2 / (1.0 - 2.0 * delta * delta / std::numbers::pi));
  out.location = m - out.scale * delta * std::sqrt(2.0 / std::numbers::pi);
  return out;
}

SkewNormalFit fit_skew_normal_detailed(std::span<const double> samples) {
  if (samples.size() < kMinSkewNormalSamples) {
    fail(ErrorCode::kInsufficientData, "skew-normal fit needs at least " +
                                           std::to_string(kMinSkewNormalSamples) +
                                           " samples, got " + std::to_string(samples.size()));
  }
  for (double x : samples) {
    if (!std::isfinite(x)) fail(ErrorCode::kNonFinite, "skew-normal samples must be finite");
  }
  const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
  if (*lo == *hi) fail(ErrorCode::kDegenerate, "all samples are identical");

  SkewNormalFit fit;
  fit.initial = moment_estimate(samples);
  fit.initial_log_likelihood = log_likelihood(fit.initial, samples);

  const double n = static_cast<double>(samples.size());
  auto unpack = [](const Eigen::VectorXd& theta) {
    return SkewNormalParams{theta(0), std::exp(theta(1)), theta(2)};
  };
  auto objective = [&](const Eigen::VectorXd& theta) {
    return -log_likelihood(unpack(theta), samples) / n;
  };

  Eigen::VectorXd theta(3);
  theta << fit.initial.location, std::log(fit.initial.scale), fit.initial.shape;
  double best = objective(theta);

  // Restart from the incumbent until a fresh simplex stops improving it.
  constexpr int kMaxRestarts = 6;
  for (int restart = 0; restart < kMaxRestarts; ++restart) {
    Eigen::VectorXd steps(3);
    steps << 0.2 * std::exp(theta(1)), 0.2, 0.5 + 0.2 * std::abs(theta(2));
    const auto run = nelder_mead(objective, theta, steps);
    fit.iterations += run.iterations;
    fit.converged = run.converged;
    const double gain = best - run.value;
    if (run.value <= best) {
      theta = run.argmin;
      best = run.value;
    }
    if (gain <= 1e-12 * (1.0 + std::abs(best))) break;
  }

  fit.params = unpack(theta);
  fit.log_likelihood = log_likelihood(fit.params, samples);
  if (fit.log_likelihood < fit.initial_log_likelihood) {
    fit.params = fit.initial;
    fit.log_likelihood = fit.initial_log_likelihood;
  }
  return fit;
}

SkewNormalParams fit_skew_normal(std::span<const double> samples) {
  return fit_skew_normal_detailed(samples).params;
}

}  // namespace biopro
