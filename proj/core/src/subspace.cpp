#include "biopro/subspace.hpp"

#include "biopro/checksum.hpp"
#include "biopro/error.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <string>

namespace biopro {
namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

void CounterfactualPairSet::validate() const {
  side_a.validate();
  side_b.validate();
  if (side_a.values.rows() != side_b.values.rows() ||
      side_a.values.cols() != side_b.values.cols()) {
    fail(ErrorCode::kDimension, "pair sides have shapes " + shape(side_a.values) + " and " +
                                    shape(side_b.values));
  }
  if (side_a.count() == 0) fail(ErrorCode::kValidation, "pair set is empty");
  for (std::size_t j = 0; j < side_a.count(); ++j) {
    if (side_a.labels[j].source_id != side_b.labels[j].source_id) {
      fail(ErrorCode::kValidation, "pair " + std::to_string(j) + " source ids differ: '" +
                                       side_a.labels[j].source_id + "' vs '" +
                                       side_b.labels[j].source_id + "'");
    }
  }
}

double BiasSubspace::orthonormality_residual() const {
  const auto k = basis.cols();
  return (basis.transpose() * basis - Matrix::Identity(k, k)).norm();
}

std::uint64_t BiasSubspace::checksum() const {
  const auto* data = reinterpret_cast<const std::byte*>(basis.data());
  return fnv1a64({data, static_cast<std::size_t>(basis.size()) * sizeof(double)});
}

Matrix difference_matrix(const CounterfactualPairSet& pairs) {
  pairs.validate();
  return pairs.side_a.values - pairs.side_b.values;
}

BiasSubspace fit_subspace(const Matrix& difference, std::size_t k) {
  const auto limit = static_cast<std::size_t>(std::min(difference.rows(), difference.cols()));
  if (k == 0 || k > limit) {
    fail(ErrorCode::kRange, "k=" + std::to_string(k) + " must lie in [1, " +
                                std::to_string(limit) + "] for a " + shape(difference) +
                                " difference matrix");
  }
  if (!difference.allFinite()) fail(ErrorCode::kNonFinite, "difference matrix is not finite");

  Eigen::BDCSVD<Matrix> svd(difference, Eigen::ComputeThinU);
  const auto ki = static_cast<Eigen::Index>(k);

  BiasSubspace out;
  out.basis = svd.matrixU().leftCols(ki);
  out.singular_values = svd.singularValues().head(ki);

  for (Eigen::Index c = 0; c < ki; ++c) {
    Eigen::Index arg = 0;
    out.basis.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.basis(arg, c) < 0.0) out.basis.col(c) *= -1.0;
  }

  const double sigma1 = out.singular_values.size() > 0 ? out.singular_values(0) : 0.0;
  for (Eigen::Index c = 0; c < ki; ++c) {
    if (!(out.singular_values(c) > 1e-12 * sigma1)) {
      out.weak_directions.push_back(static_cast<std::size_t>(c));
    }
  }
  return out;
}

Projector orthogonal_projector(const BiasSubspace& subspace) {
  const double residual = subspace.orthonormality_residual();
  if (!(residual <= kOrthonormalityTolerance)) {
    fail(ErrorCode::kValidation, "basis orthonormality residual " + std::to_string(residual) +
                                     " exceeds tolerance; refit the subspace");
  }
  const auto d = subspace.basis.rows();
  const auto& u = subspace.basis;
  Matrix p = Matrix::Identity(d, d) - u * u.transpose();
  p = 0.5 * (p + p.transpose()).eval();

  const double dd = static_cast<double>(d);
  const double idempotence = (p * p - p).norm();
  const double symmetry = (p - p.transpose()).norm();
  const double annihilation = (p * u).norm();
  if (idempotence > 1e-9 * dd || symmetry > 1e-10 * dd || annihilation > 1e-9) {
    fail(ErrorCode::kNumeric, "orthogonal projector failed verification (idempotence " +
                                  std::to_string(idempotence) + ", symmetry " +
                                  std::to_string(symmetry) + ", |PU| " +
                                  std::to_string(annihilation) + ")");
  }

  Projector out;
  out.matrix = std::move(p);
  out.kind = ProjectorKind::kOrthogonal;
  out.provenance.subspace_checksum = subspace.checksum();
  out.provenance.parameters = "k=" + std::to_string(subspace.rank());
  return out;
}

EmbeddingMatrix project(const Projector& p, const EmbeddingMatrix& h) {
  if (p.matrix.cols() != h.values.rows()) {
    fail(ErrorCode::kDimension, "projector is " + shape(p.matrix) + " but embeddings are " +
                                    shape(h.values));
  }
  return EmbeddingMatrix(p.matrix * h.values, h.labels);
}

Decomposition decompose(const EmbeddingMatrix& h, const BiasSubspace& subspace) {
  if (subspace.basis.rows() != h.values.rows()) {
    fail(ErrorCode::kDimension, "subspace basis is " + shape(subspace.basis) +
                                    " but embeddings are " + shape(h.values));
  }
  Matrix bias = subspace.basis * (subspace.basis.transpose() * h.values);
  Matrix sem = h.values - bias;
  return {EmbeddingMatrix(std::move(bias), h.labels), EmbeddingMatrix(std::move(sem), h.labels)};
}

}  // namespace biopro
