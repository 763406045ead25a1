#include "biopro/calibration.hpp"

#include "biopro/error.hpp"
#include "biopro/keyvalue.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <string>

namespace biopro {
namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

void CalibrationProblem::validate() const {
  const auto d = p_perp.rows();
  if (p_perp.cols() != d || z_source.rows() != d || z_target.rows() != d) {
    fail(ErrorCode::kDimension, "calibration shapes disagree: P_perp " + shape(p_perp) +
                                    ", source " + shape(z_source) + ", target " +
                                    shape(z_target));
  }
  if (z_source.cols() != z_target.cols()) {
    fail(ErrorCode::kDimension, "source has " + std::to_string(z_source.cols()) +
                                    " columns but target has " +
                                    std::to_string(z_target.cols()));
  }
  if (z_source.cols() < 1) fail(ErrorCode::kValidation, "calibration needs at least one column");
  if (!(lambda_g >= 0.0) || !std::isfinite(lambda_g)) {
    fail(ErrorCode::kRange, "lambda_g must be non-negative and finite");
  }
  if (!p_perp.allFinite() || !z_source.allFinite() || !z_target.allFinite()) {
    fail(ErrorCode::kNonFinite, "calibration inputs must be finite");
  }
}

CalibrationProblem make_problem(const Projector& p_perp, const EmbeddingMatrix& z_source,
                                const EmbeddingMatrix& z_target, double lambda_g) {
  if (p_perp.kind != ProjectorKind::kOrthogonal) {
    fail(ErrorCode::kValidation, "calibration starts from an orthogonal projector");
  }
  CalibrationProblem problem{p_perp.matrix, z_source.values, z_target.values, lambda_g};
  problem.validate();
  return problem;
}

double calibration_objective(const Matrix& p, const CalibrationProblem& problem) {
  problem.validate();
  if (p.rows() != problem.p_perp.rows() || p.cols() != problem.p_perp.cols()) {
    fail(ErrorCode::kDimension, "P is " + shape(p) + ", expected " + shape(problem.p_perp));
  }
  return (p - problem.p_perp).squaredNorm() +
         problem.lambda_g * (p * problem.z_source - problem.z_target).squaredNorm();
}

Matrix objective_gradient(const Matrix& p, const CalibrationProblem& problem) {
  problem.validate();
  if (p.rows() != problem.p_perp.rows() || p.cols() != problem.p_perp.cols()) {
    fail(ErrorCode::kDimension, "P is " + shape(p) + ", expected " + shape(problem.p_perp));
  }
  return 2.0 * (p - problem.p_perp) +
         2.0 * problem.lambda_g * (p * problem.z_source - problem.z_target) *
             problem.z_source.transpose();
}

CalibrationResult solve_calibration(const CalibrationProblem& problem) {
  problem.validate();
  const auto d = problem.p_perp.rows();
  const double lambda = problem.lambda_g;

  Matrix gram = Matrix::Identity(d, d);
  gram.selfadjointView<Eigen::Lower>().rankUpdate(problem.z_source, lambda);
  gram.triangularView<Eigen::StrictlyUpper>() = gram.transpose();
  const Matrix rhs_t =
      (problem.p_perp + lambda * problem.z_target * problem.z_source.transpose()).transpose();

  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    Eigen::LDLT<Matrix> ldlt(gram);
    const double pivot = ldlt.vectorD().minCoeff();
    fail(ErrorCode::kNumeric, "Cholesky factorisation failed; smallest pivot " + format_double(pivot));
  }

  Matrix p_t = llt.solve(rhs_t);
  p_t += llt.solve(rhs_t - gram * p_t);

  CalibrationResult out;
  out.projector.matrix = p_t.transpose();
  out.projector.kind = ProjectorKind::kCalibrated;
  out.projector.provenance.parameters = "lambda_g=" + format_double(lambda);
  out.lambda_g = lambda;
  out.smallest_pivot = llt.matrixLLT().diagonal().array().square().minCoeff();
  out.objective = calibration_objective(out.projector.matrix, problem);
  out.gradient_residual = objective_gradient(out.projector.matrix, problem).norm();

  const double bound = kStationarityTolerance * (1.0 + out.projector.matrix.norm());
  if (!(out.gradient_residual <= bound)) {
    fail(ErrorCode::kNumeric, "calibrated projector is not stationary: gradient norm " +
                                  format_double(out.gradient_residual) + " exceeds " +
                                  format_double(bound));
  }
  return out;
}

Projector closed_form_calibration(const CalibrationProblem& problem) {
  return solve_calibration(problem).projector;
}

DirectionalPair directional_pair(const Projector& p_perp, const EmbeddingMatrix& z_a,
                                 const EmbeddingMatrix& z_b, double lambda_g) {
  DirectionalPair out;
  out.a_to_b = solve_calibration(make_problem(p_perp, z_a, z_b, lambda_g));
  out.b_to_a = solve_calibration(make_problem(p_perp, z_b, z_a, lambda_g));
  out.a_to_b.projector.provenance.subspace_checksum = p_perp.provenance.subspace_checksum;
  out.b_to_a.projector.provenance.subspace_checksum = p_perp.provenance.subspace_checksum;
  out.a_to_b.projector.provenance.parameters += ";direction=a2b";
  out.b_to_a.projector.provenance.parameters += ";direction=b2a";
  return out;
}

EmbeddingMatrix apply_calibrated(const Projector& p, const EmbeddingMatrix& h) {
  if (p.matrix.cols() != h.values.rows()) {
    fail(ErrorCode::kDimension, "projector is " + shape(p.matrix) + " but embeddings are " +
                                    shape(h.values));
  }
  return EmbeddingMatrix(p.matrix * h.values, h.labels);
}

EmbeddingMatrix pool_columns(const EmbeddingMatrix& z) {
  if (z.count() == 0) fail(ErrorCode::kValidation, "cannot pool an empty matrix");
  Matrix centroid = z.values.rowwise().mean();
  LabelRecord label;
  label.group = z.labels.empty() ? Group::kUnlabeled : z.labels.front().group;
  label.source_id = "centroid";
  return EmbeddingMatrix(std::move(centroid), {label});
}

}  // namespace biopro
