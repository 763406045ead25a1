#include "biopro/nelder_mead.hpp"
#include "biopro/rng.hpp"
#include "biopro/skew_normal.hpp"

#include "matchers.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace biopro {
namespace {

std::vector<double> draw(const SkewNormalParams& p, std::size_t n, std::uint64_t seed) {
  RandomStream rng(seed, 0);
  std::vector<double> out(n);
  for (auto& x : out) x = sample_skew_normal(p, rng);
  return out;
}

TEST(SkewNormal, PdfMatchesOracle) {
  for (const SkewNormalParams p : {SkewNormalParams{0, 1, 0}, SkewNormalParams{2, 1.5, 4},
                                   SkewNormalParams{-1, 0.3, -7}}) {
    for (double x = -6; x <= 8; x += 0.37) {
      EXPECT_NEAR(pdf(p, x), oracle::skew_normal_pdf(p, x), 1e-14 + 1e-12 * pdf(p, x));
      if (pdf(p, x) > 1e-300) EXPECT_NEAR(log_pdf(p, x), std::log(pdf(p, x)), 1e-10);
    }
  }
}

TEST(SkewNormal, ZeroShapeIsNormal) {
  const SkewNormalParams p{1.0, 2.0, 0.0};
  for (double x : {-3.0, 0.0, 1.0, 4.5}) {
    EXPECT_NEAR(pdf(p, x), normal_pdf((x - 1.0) / 2.0) / 2.0, 1e-15);
    EXPECT_NEAR(cdf(p, x), normal_cdf((x - 1.0) / 2.0), 1e-14);
  }
}

TEST(SkewNormal, CdfIsIntegralOfPdf) {
  const SkewNormalParams p{2.0, 1.5, 4.0};
  for (double x : {1.0, 2.0, 3.5, 6.0}) {
    const double integral = oracle::integrate([&](double t) { return oracle::skew_normal_pdf(p, t); },
                                              -20.0, x, 1e-13);
    EXPECT_NEAR(cdf(p, x), integral, 1e-9);
  }
}

TEST(SkewNormal, DerivativeMatchesFiniteDifference) {
  const SkewNormalParams p{0.5, 0.8, -2.5};
  for (double x = -2; x <= 3; x += 0.25) {
    const double h = 1e-6;
    EXPECT_NEAR(pdf_derivative(p, x), (pdf(p, x + h) - pdf(p, x - h)) / (2 * h), 1e-6);
  }
}

TEST(SkewNormal, ModeIsDensityMaximum) {
  const SkewNormalParams p{2.0, 1.5, 4.0};
  const double m = mode(p);
  EXPECT_NEAR(pdf_derivative(p, m), 0.0, 1e-9);
  EXPECT_GT(pdf(p, m), pdf(p, m + 1e-3));
  EXPECT_GT(pdf(p, m), pdf(p, m - 1e-3));
}

TEST(SkewNormal, LogNormalCdfTail) {
  EXPECT_NEAR(log_normal_cdf(0.0), std::log(0.5), 1e-15);
  EXPECT_NEAR(log_normal_cdf(-40.0), -804.60844201, 1e-6);
  EXPECT_TRUE(std::isfinite(log_normal_cdf(-1e4)));
}

TEST(SkewNormal, MomentsOfSamples) {
  const SkewNormalParams p{2.0, 1.5, 4.0};
  const auto xs = draw(p, 200000, 1);
  double m = 0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  double v = 0;
  for (double x : xs) v += (x - m) * (x - m);
  v /= static_cast<double>(xs.size() - 1);
  EXPECT_NEAR(m, mean(p), 0.01);
  EXPECT_NEAR(v, variance(p), 0.02);
}

TEST(SkewNormal, FitStandardNormalFromReferenceGenerator) {
  std::mt19937_64 gen(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> xs(10000);
  for (auto& x : xs) x = normal(gen);
  const auto fit = fit_skew_normal(xs);
  EXPECT_NEAR(fit.shape, 0.0, 0.1);
  EXPECT_NEAR(fit.location, 0.0, 0.05);
  EXPECT_NEAR(fit.scale, 1.0, 0.05);
}

TEST(SkewNormal, FitRecoversSkewedParams) {
  const SkewNormalParams truth{2.0, 1.5, 4.0};
  const auto fit = fit_skew_normal(draw(truth, 10000, 13));
  EXPECT_NEAR(fit.scale, 1.5, 0.05 * 1.5);
  EXPECT_NEAR(fit.shape, 4.0, 0.5);
  EXPECT_NEAR(fit.location, 2.0, 0.1);
}

TEST(SkewNormal, FitNeverRegressesFromMomentStart) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const SkewNormalParams truth{0.0, 1.0, static_cast<double>(seed) - 5.0};
    const auto xs = draw(truth, 300, seed);
    const auto fit = fit_skew_normal_detailed(xs);
    EXPECT_GE(fit.log_likelihood, fit.initial_log_likelihood);
    EXPECT_NEAR(fit.log_likelihood, log_likelihood(fit.params, xs), 1e-9);
    EXPECT_NEAR(fit.initial_log_likelihood, log_likelihood(moment_estimate(xs), xs), 1e-9);
  }
}

TEST(SkewNormal, DegenerateInputs) {
  const std::vector<double> same(50, 3.0);
  EXPECT_BIOPRO_ERROR(fit_skew_normal(same), ErrorCode::kDegenerate);
  const std::vector<double> few{1, 2, 3};
  EXPECT_BIOPRO_ERROR(fit_skew_normal(few), ErrorCode::kInsufficientData);
}

TEST(SkewNormal, ParamsValidate) {
  EXPECT_THROW((SkewNormalParams{0, 0, 1}).validate(), Error);
  EXPECT_THROW((SkewNormalParams{0, 1, std::nan("")}).validate(), Error);
  EXPECT_NO_THROW((SkewNormalParams{0, 1, -3}).validate());
}

TEST(SkewNormal, SamplerIsDeterministicPerStream) {
  EXPECT_EQ(draw({0, 1, 2}, 100, 5), draw({0, 1, 2}, 100, 5));
  EXPECT_NE(draw({0, 1, 2}, 100, 5), draw({0, 1, 2}, 100, 6));
  RandomStream a(5, 1), b(5, 2);
  EXPECT_NE(a.next_u64(), b.next_u64());
}

TEST(NelderMead, MinimisesRosenbrock) {
  const auto f = [](const Eigen::VectorXd& x) {
    return 100 * std::pow(x(1) - x(0) * x(0), 2) + std::pow(1 - x(0), 2);
  };
  const auto r = nelder_mead(f, Eigen::Vector2d(-1.2, 1.0), Eigen::Vector2d(0.5, 0.5));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.argmin(0), 1.0, 1e-5);
  EXPECT_NEAR(r.argmin(1), 1.0, 1e-5);
  EXPECT_LE(r.value, f(Eigen::Vector2d(-1.2, 1.0)));
}

}  // namespace
}  // namespace biopro
