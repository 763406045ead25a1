#pragma once

#include "biopro/embedding.hpp"
#include "biopro/projector.hpp"
#include "biopro/skew_normal.hpp"
#include "biopro/subspace.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace biopro {

/// Which integral the trade-off coefficient multiplies in the threshold
/// objective J(δ) = a·∫₀^δ p_n + b·∫_δ^∞ p_e.
enum class LambdaSide {
  kWeightsExplicit,  // a = 1, b = λ   (stationarity p_n = λ·p_e)
  kWeightsNeutral,   // a = λ, b = 1   (stationarity λ·p_n = p_e)
};

std::string_view to_string(LambdaSide side) noexcept;
LambdaSide parse_lambda_side(std::string_view text);

struct SelectionPolicy {
  SkewNormalParams neutral;
  SkewNormalParams explicit_;
  double delta_c = 0.0;  // +inf projects every column
  double lambda_c = 1.0;
  std::size_t score_dim = 0;
  LambdaSide lambda_side = LambdaSide::kWeightsExplicit;

  void validate() const;

  friend bool operator==(const SelectionPolicy&, const SelectionPolicy&) = default;
};

/// |u_dimᵀ h_j| for every column j.
std::vector<double> projection_scores(const EmbeddingMatrix& h, const BiasSubspace& subspace,
                                      std::size_t dim);

enum class ThresholdMethod {
  kNewton,        // Newton on the stationarity equation from the mode midpoint
  kGoldenSection, // grid + golden section, polished on the stationarity equation
  kBoundary,      // objective is maximised at a bracket endpoint
  kFlat,          // weighted densities coincide; lower endpoint returned
};

std::string_view to_string(ThresholdMethod method) noexcept;

struct ThresholdResult {
  double delta = 0.0;
  double objective = 0.0;
  // Weighted density difference at delta (zero at an interior stationary point).
  double stationarity = 0.0;
  double max_density = 0.0;
  double bracket_hi = 0.0;
  ThresholdMethod method = ThresholdMethod::kNewton;
  int newton_iterations = 0;
  // True when no interior stationary maximum was found.
  bool boundary = false;
};

inline constexpr std::size_t kThresholdGridPoints = 10000;

/// Threshold objective J(δ) for the given side convention.
double threshold_objective(const SkewNormalParams& neutral, const SkewNormalParams& explicit_,
                           double lambda_c, LambdaSide side, double delta);

/// Maximiser of J over [0, max mode + 10·max ω].
///
/// Newton's method runs on J'(δ) = 0 from the midpoint of the two modes. A
/// 10,000-point grid of J locates the global maximum independently; if
/// Newton diverged, left the bracket, stopped at a minimum, or found a
/// stationary point with a lower objective than the grid maximum, the grid
/// cell is refined by golden section instead. Where J is flat to working
/// precision past the grid maximum, the run is walked while J' > 0, so a
/// weighted density still positive at the bracket end returns the bracket
/// end. Exact ties resolve to the smaller δ; a flat objective (p_n and p_e
/// identical under λ = 1) returns 0.
ThresholdResult solve_threshold_detailed(const SkewNormalParams& neutral,
                                         const SkewNormalParams& explicit_, double lambda_c,
                                         LambdaSide side);
double solve_threshold(const SkewNormalParams& neutral, const SkewNormalParams& explicit_,
                       double lambda_c, LambdaSide side);

struct PolicyFit {
  SelectionPolicy policy;
  SkewNormalFit neutral_fit;
  SkewNormalFit explicit_fit;
  ThresholdResult threshold;
};

PolicyFit fit_policy(std::span<const double> neutral_scores,
                     std::span<const double> explicit_scores, double lambda_c, LambdaSide side,
                     std::size_t score_dim);

struct SelectiveProjection {
  EmbeddingMatrix embeddings;
  std::vector<bool> projected;  // true where the column was replaced by P·h

  std::size_t projected_count() const;
};

/// Column j becomes P_⊥·h_j iff its score on policy.score_dim is below
/// delta_c; otherwise it is copied verbatim.
SelectiveProjection selective_project(const EmbeddingMatrix& h, const Projector& p_perp,
                                      const SelectionPolicy& policy,
                                      const BiasSubspace& subspace);

}  // namespace biopro
