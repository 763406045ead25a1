#pragma once

#include "biopro/embedding.hpp"
#include "biopro/projector.hpp"

#include <utility>

namespace biopro {

/// min_P ‖P − P_⊥‖_F² + λ·‖P·Z_src − Z_tgt‖_F²
struct CalibrationProblem {
  Matrix p_perp;
  Matrix z_source;
  Matrix z_target;
  double lambda_g = 0.0;

  void validate() const;
};

CalibrationProblem make_problem(const Projector& p_perp, const EmbeddingMatrix& z_source,
                                const EmbeddingMatrix& z_target, double lambda_g);

double calibration_objective(const Matrix& p, const CalibrationProblem& problem);

/// 2(P − P_⊥) + 2λ(P·Z_src − Z_tgt)·Z_srcᵀ
Matrix objective_gradient(const Matrix& p, const CalibrationProblem& problem);

struct CalibrationResult {
  Projector projector;
  double objective = 0.0;
  double gradient_residual = 0.0;  // ‖∇L(P*)‖_F
  double smallest_pivot = 0.0;     // min diag(L)² of the Cholesky factor
  double lambda_g = 0.0;
};

inline constexpr double kStationarityTolerance = 1e-8;

/// P* = (P_⊥ + λ Z_tgt Z_srcᵀ)(I + λ Z_src Z_srcᵀ)⁻¹, obtained from a Cholesky
/// solve of (I + λ Z_src Z_srcᵀ)·P*ᵀ = (P_⊥ + λ Z_tgt Z_srcᵀ)ᵀ followed by one
/// step of iterative refinement. Throws kNumeric if the factorisation fails
/// (message carries the smallest LDLᵀ pivot) or if
/// ‖∇L(P*)‖_F > 1e-8·(1 + ‖P*‖_F).
CalibrationResult solve_calibration(const CalibrationProblem& problem);
Projector closed_form_calibration(const CalibrationProblem& problem);

struct DirectionalPair {
  CalibrationResult a_to_b;
  CalibrationResult b_to_a;
};

/// Two calibrations with source and target swapped.
DirectionalPair directional_pair(const Projector& p_perp, const EmbeddingMatrix& z_a,
                                 const EmbeddingMatrix& z_b, double lambda_g);

EmbeddingMatrix apply_calibrated(const Projector& p, const EmbeddingMatrix& h);

/// d×1 column mean, used for centroid (pooled) calibration.
EmbeddingMatrix pool_columns(const EmbeddingMatrix& z);

}  // namespace biopro
