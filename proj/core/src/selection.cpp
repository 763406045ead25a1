#include "biopro/selection.hpp"

#include "biopro/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace biopro {
namespace {

struct Weights {
  double neutral;
  double explicit_;
};

Weights weights_for(double lambda_c, LambdaSide side) {
  return side == LambdaSide::kWeightsExplicit ? Weights{1.0, lambda_c} : Weights{lambda_c, 1.0};
}

// Weighted density difference J'(δ) and its derivative J''(δ).
struct Stationarity {
  const SkewNormalParams& n;
  const SkewNormalParams& e;
  Weights w;

  double value(double x) const { return w.neutral * pdf(n, x) - w.explicit_ * pdf(e, x); }
  double slope(double x) const {
    return w.neutral * pdf_derivative(n, x) - w.explicit_ * pdf_derivative(e, x);
  }
};

// Safeguarded Newton for a root of g with g(lo) > 0 > g(hi).
double refine_root(const Stationarity& g, double lo, double hi) {
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    const double gx = g.value(x);
    if (gx == 0.0) return x;
    if (gx > 0.0) lo = x; else hi = x;
    const double slope = g.slope(x);
    double next = slope != 0.0 ? x - gx / slope : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - x) <= 1e-15 * (1.0 + std::abs(x)) || hi - lo <= 1e-15 * (1.0 + std::abs(x))) {
      return next;
    }
    x = next;
  }
  return x;
}

}  // namespace

std::string_view to_string(LambdaSide side) noexcept {
  return side == LambdaSide::kWeightsExplicit ? "weights_explicit" : "weights_neutral";
}

LambdaSide parse_lambda_side(std::string_view text) {
  if (text == "weights_explicit") return LambdaSide::kWeightsExplicit;
  if (text == "weights_neutral") return LambdaSide::kWeightsNeutral;
  fail(ErrorCode::kUsage, "unknown lambda side '" + std::string(text) + "'");
}

std::string_view to_string(ThresholdMethod method) noexcept {
  switch (method) {
    case ThresholdMethod::kNewton: return "newton";
    case ThresholdMethod::kGoldenSection: return "golden_section";
    case ThresholdMethod::kBoundary: return "boundary";
    case ThresholdMethod::kFlat: return "flat";
  }
  return "newton";
}

void SelectionPolicy::validate() const {
  neutral.validate();
  explicit_.validate();
  if (std::isnan(delta_c) || delta_c < 0.0) fail(ErrorCode::kValidation, "delta_c must be non-negative");
  if (!(lambda_c > 0.0) || !std::isfinite(lambda_c)) {
    fail(ErrorCode::kValidation, "lambda_c must be positive and finite");
  }
}

std::vector<double> projection_scores(const EmbeddingMatrix& h, const BiasSubspace& subspace,
                                      std::size_t dim) {
  if (dim >= subspace.rank()) {
    fail(ErrorCode::kRange, "score dimension " + std::to_string(dim) + " out of range for k=" +
                                std::to_string(subspace.rank()));
  }
  if (subspace.basis.rows() != h.values.rows()) {
    fail(ErrorCode::kDimension, "subspace dimension " + std::to_string(subspace.dim()) +
                                    " does not match embedding dimension " +
                                    std::to_string(h.dim()));
  }
  const Vector projected = h.values.transpose() * subspace.basis.col(static_cast<Eigen::Index>(dim));
  std::vector<double> scores(static_cast<std::size_t>(projected.size()));
  for (Eigen::Index j = 0; j < projected.size(); ++j) {
    scores[static_cast<std::size_t>(j)] = std::abs(projected(j));
  }
  return scores;
}

double threshold_objective(const SkewNormalParams& neutral, const SkewNormalParams& explicit_,
                           double lambda_c, LambdaSide side, double delta) {
  const auto w = weights_for(lambda_c, side);
  return w.neutral * (cdf(neutral, delta) - cdf(neutral, 0.0)) +
         w.explicit_ * (1.0 - cdf(explicit_, delta));
}

ThresholdResult solve_threshold_detailed(const SkewNormalParams& neutral,
                                         const SkewNormalParams& explicit_, double lambda_c,
                                         LambdaSide side) {
  neutral.validate();
  explicit_.validate();
  if (!(lambda_c > 0.0) || !std::isfinite(lambda_c)) {
    fail(ErrorCode::kRange, "lambda_c must be positive and finite");
  }

  const auto w = weights_for(lambda_c, side);
  const Stationarity g{neutral, explicit_, w};
  const double mode_n = mode(neutral);
  const double mode_e = mode(explicit_);
  double hi = std::max(mode_n, mode_e) + 10.0 * std::max(neutral.scale, explicit_.scale);
  if (!(hi > 0.0)) hi = 10.0 * std::max(neutral.scale, explicit_.scale);

  // Objective without the constant −a·F_n(0) term; it does not move the argmax.
  auto objective = [&](double x) {
    return w.neutral * cdf(neutral, x) + w.explicit_ * (1.0 - cdf(explicit_, x));
  };

  ThresholdResult result;
  result.bracket_hi = hi;

  const std::size_t cells = kThresholdGridPoints;
  const double step = hi / static_cast<double>(cells);
  std::vector<double> grid(cells + 1);
  double max_abs_g = 0.0;
  double max_density = 0.0;
  std::size_t best = 0;
  for (std::size_t i = 0; i <= cells; ++i) {
    const double x = step * static_cast<double>(i);
    grid[i] = objective(x);
    if (grid[i] > grid[best]) best = i;
    max_abs_g = std::max(max_abs_g, std::abs(g.value(x)));
    max_density = std::max({max_density, w.neutral * pdf(neutral, x), w.explicit_ * pdf(explicit_, x)});
  }
  result.max_density = max_density;

  auto finish = [&](double delta, ThresholdMethod method) {
    result.delta = delta;
    result.method = method;
    result.objective = threshold_objective(neutral, explicit_, lambda_c, side, delta);
    result.stationarity = g.value(delta);
    result.boundary = method == ThresholdMethod::kBoundary || method == ThresholdMethod::kFlat;
    return result;
  };

  if (max_abs_g <= 1e-14 * max_density || max_density == 0.0) {
    return finish(0.0, ThresholdMethod::kFlat);
  }

  // Newton on J'(δ) = 0 from the midpoint of the modes.
  double newton = std::clamp(0.5 * (mode_n + mode_e), 0.0, hi);
  bool newton_ok = false;
  for (int it = 0; it < 100; ++it) {
    result.newton_iterations = it + 1;
    const double gx = g.value(newton);
    const double slope = g.slope(newton);
    if (!std::isfinite(gx) || !std::isfinite(slope) || slope == 0.0) break;
    const double next = newton - gx / slope;
    if (!(next >= 0.0 && next <= hi)) break;
    const bool small_step = std::abs(next - newton) <= 1e-14 * (1.0 + std::abs(next));
    newton = next;
    if (small_step || g.value(newton) == 0.0) {
      newton_ok = g.slope(newton) < 0.0;
      break;
    }
  }
  const double grid_best = grid[best];
  if (newton_ok && objective(newton) >= grid_best - 1e-12 * (1.0 + std::abs(grid_best))) {
    return finish(newton, ThresholdMethod::kNewton);
  }

  // Far in the tails J is flat to working precision; walk such a run while
  // J' = g stays positive.
  const double flat = 8.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(grid_best));
  if (g.value(step * static_cast<double>(best)) > 0.0) {
    std::size_t i = best;
    while (i < cells && grid[i + 1] >= grid_best - flat &&
           g.value(step * static_cast<double>(i + 1)) > 0.0) {
      ++i;
    }
    if (i == cells) return finish(hi, ThresholdMethod::kBoundary);
    if (i > best && grid[i + 1] >= grid_best - flat) {
      return finish(refine_root(g, step * static_cast<double>(i), step * static_cast<double>(i + 1)),
                    ThresholdMethod::kGoldenSection);
    }
  }

  if (best == 0 || best == cells) {
    return finish(step * static_cast<double>(best), ThresholdMethod::kBoundary);
  }

  // Golden section inside the neighbouring grid cells.
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = step * static_cast<double>(best - 1);
  double up = step * static_cast<double>(best + 1);
  const double cell_lo = lo;
  const double cell_hi = up;
  double x1 = up - kInvPhi * (up - lo);
  double x2 = lo + kInvPhi * (up - lo);
  double f1 = objective(x1);
  double f2 = objective(x2);
  while (up - lo > 1e-12 * (1.0 + hi)) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + kInvPhi * (up - lo);
      f2 = objective(x2);
    } else {
      up = x2;
      x2 = x1;
      f2 = f1;
      x1 = up - kInvPhi * (up - lo);
      f1 = objective(x1);
    }
  }
  double delta = 0.5 * (lo + up);
  if (g.value(cell_lo) > 0.0 && g.value(cell_hi) < 0.0) delta = refine_root(g, cell_lo, cell_hi);
  return finish(delta, ThresholdMethod::kGoldenSection);
}

double solve_threshold(const SkewNormalParams& neutral, const SkewNormalParams& explicit_,
                       double lambda_c, LambdaSide side) {
  return solve_threshold_detailed(neutral, explicit_, lambda_c, side).delta;
}

PolicyFit fit_policy(std::span<const double> neutral_scores,
                     std::span<const double> explicit_scores, double lambda_c, LambdaSide side,
                     std::size_t score_dim) {
  PolicyFit out;
  out.neutral_fit = fit_skew_normal_detailed(neutral_scores);
  out.explicit_fit = fit_skew_normal_detailed(explicit_scores);
  out.threshold = solve_threshold_detailed(out.neutral_fit.params, out.explicit_fit.params,
                                           lambda_c, side);
  out.policy.neutral = out.neutral_fit.params;
  out.policy.explicit_ = out.explicit_fit.params;
  out.policy.delta_c = out.threshold.delta;
  out.policy.lambda_c = lambda_c;
  out.policy.lambda_side = side;
  out.policy.score_dim = score_dim;
  return out;
}

std::size_t SelectiveProjection::projected_count() const {
  return static_cast<std::size_t>(std::count(projected.begin(), projected.end(), true));
}

SelectiveProjection selective_project(const EmbeddingMatrix& h, const Projector& p_perp,
                                      const SelectionPolicy& policy,
                                      const BiasSubspace& subspace) {
  policy.validate();
  if (p_perp.matrix.cols() != h.values.rows()) {
    fail(ErrorCode::kDimension, "projector dimension " + std::to_string(p_perp.dim()) +
                                    " does not match embedding dimension " +
                                    std::to_string(h.dim()));
  }
  const auto scores = projection_scores(h, subspace, policy.score_dim);
  const Matrix projected = p_perp.matrix * h.values;

  SelectiveProjection out;
  out.embeddings = h;
  out.projected.assign(scores.size(), false);
  for (std::size_t j = 0; j < scores.size(); ++j) {
    if (scores[j] < policy.delta_c) {
      out.embeddings.values.col(static_cast<Eigen::Index>(j)) =
          projected.col(static_cast<Eigen::Index>(j));
      out.projected[j] = true;
    }
  }
  return out;
}

}  // namespace biopro
