#include "biopro/metrics.hpp"
#include "biopro/subspace.hpp"

#include "matchers.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace biopro {
namespace {

using testing::bits_equal;
using testing::max_abs_diff;

BiasSubspace random_subspace(Eigen::Index d, Eigen::Index k, std::uint64_t seed) {
  return fit_subspace(oracle::random_matrix(d, std::max<Eigen::Index>(k, 3) + 5, seed), k);
}

TEST(DifferenceMatrix, IdenticalSidesGiveZero) {
  const auto h = EmbeddingMatrix::unlabeled(oracle::random_matrix(4, 6, 1));
  const CounterfactualPairSet pairs{h, h};
  EXPECT_TRUE(difference_matrix(pairs).isZero(0.0));
}

TEST(DifferenceMatrix, DirectSubtraction) {
  Matrix a(2, 1), b(2, 1);
  a << 2, 0;
  b << 0, 0;
  const CounterfactualPairSet pairs{EmbeddingMatrix::unlabeled(a), EmbeddingMatrix::unlabeled(b)};
  EXPECT_EQ(difference_matrix(pairs), a);
}

TEST(DifferenceMatrix, MismatchedShapesRejected) {
  const CounterfactualPairSet pairs{EmbeddingMatrix::unlabeled(Matrix::Ones(2, 3)),
                                    EmbeddingMatrix::unlabeled(Matrix::Ones(2, 4))};
  EXPECT_THROW(difference_matrix(pairs), Error);
}

TEST(FitSubspace, RankOneAnalytic) {
  Matrix d = Matrix::Zero(4, 5);
  d.row(0).setConstant(3.0);
  const auto sub = fit_subspace(d, 1);
  EXPECT_NEAR((sub.basis.col(0) - Vector::Unit(4, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(sub.singular_values(0), 3.0 * std::sqrt(5.0), 1e-12);
  EXPECT_FALSE(sub.rank_deficient());
}

TEST(FitSubspace, OrthogonalColumnsOrderedBySize) {
  Matrix d = Matrix::Zero(3, 6);
  for (int j = 0; j < 3; ++j) d(0, j) = 5.0;
  for (int j = 3; j < 6; ++j) d(1, j) = 2.0;
  const auto sub = fit_subspace(d, 2);
  EXPECT_NEAR((sub.basis.col(0) - Vector::Unit(3, 0)).norm(), 0.0, 1e-12);
  EXPECT_NEAR((sub.basis.col(1) - Vector::Unit(3, 1)).norm(), 0.0, 1e-12);
}

TEST(FitSubspace, MatchesJacobiOracle) {
  const Matrix d = oracle::random_matrix(16, 40, 3);
  const auto sub = fit_subspace(d, 2);
  const auto eig = oracle::jacobi_eigen(d * d.transpose());
  for (int i = 0; i < 2; ++i) {
    const double cosine = std::abs(sub.basis.col(i).dot(eig.vectors.col(i)));
    EXPECT_GE(cosine, 1.0 - 1e-10) << "column " << i;
    EXPECT_NEAR(sub.singular_values(i), std::sqrt(eig.values(i)), 1e-9 * sub.singular_values(0));
  }
}

TEST(FitSubspace, SignConventionAndDeterminism) {
  const Matrix d = oracle::random_matrix(10, 20, 9);
  const auto a = fit_subspace(d, 3);
  const auto b = fit_subspace(d, 3);
  EXPECT_TRUE(bits_equal(a.basis, b.basis));
  EXPECT_EQ(a.checksum(), b.checksum());
  for (int i = 0; i < 3; ++i) {
    Eigen::Index arg = 0;
    a.basis.col(i).cwiseAbs().maxCoeff(&arg);
    EXPECT_GT(a.basis(arg, i), 0.0);
  }
  const auto flipped = fit_subspace(-d, 3);
  EXPECT_LE(max_abs_diff(a.basis, flipped.basis), 1e-12);
}

TEST(FitSubspace, RangeErrors) {
  EXPECT_BIOPRO_ERROR(fit_subspace(Matrix::Ones(4, 3), 4), ErrorCode::kRange);
  EXPECT_BIOPRO_ERROR(fit_subspace(Matrix::Ones(4, 3), 0), ErrorCode::kRange);
}

TEST(FitSubspace, ZeroMatrixIsFlaggedNotFatal) {
  const auto sub = fit_subspace(Matrix::Zero(4, 6), 2);
  EXPECT_TRUE(sub.rank_deficient());
  EXPECT_LE(sub.orthonormality_residual(), kOrthonormalityTolerance);
}

TEST(FitSubspace, RankDeficientMarksWeakDirections) {
  Matrix d = Matrix::Zero(5, 8);
  d.row(2).setConstant(1.0);
  const auto sub = fit_subspace(d, 3);
  EXPECT_EQ(sub.weak_directions, (std::vector<std::size_t>{1, 2}));
}

TEST(Projector, CoordinateSubspace) {
  BiasSubspace sub;
  sub.basis = Vector::Unit(3, 0);
  sub.singular_values = Vector::Ones(1);
  const auto p = orthogonal_projector(sub);
  EXPECT_TRUE(p.matrix.isApprox(Vector(Eigen::Vector3d(0, 1, 1)).asDiagonal().toDenseMatrix()));
  EXPECT_EQ(p.kind, ProjectorKind::kOrthogonal);
  EXPECT_EQ(p.provenance.subspace_checksum, sub.checksum());
}

TEST(Projector, FullBasisGivesZero) {
  const auto sub = random_subspace(5, 5, 2);
  EXPECT_LE(orthogonal_projector(sub).matrix.norm(), 1e-12);
}

TEST(Projector, TraceIsComplementDimension) {
  const auto sub = random_subspace(8, 2, 5);
  EXPECT_NEAR(orthogonal_projector(sub).matrix.trace(), 6.0, 1e-10);
}

TEST(Projector, RefusesNonOrthonormalBasis) {
  BiasSubspace sub;
  sub.basis = Matrix::Ones(3, 1);
  sub.singular_values = Vector::Ones(1);
  EXPECT_THROW(orthogonal_projector(sub), Error);
}

TEST(Projector, AlgebraOverGrid) {
  std::uint64_t seed = 100;
  for (Eigen::Index d : {4, 32, 256}) {
    for (Eigen::Index k : {1, 2, 8}) {
      if (k > d) continue;
      const auto sub = random_subspace(d, k, seed++);
      const Matrix& p = orthogonal_projector(sub).matrix;
      const double dd = static_cast<double>(d);
      EXPECT_LE((p * p - p).norm(), 1e-9 * dd) << d << "x" << k;
      EXPECT_LE((p - p.transpose()).norm(), 1e-10 * dd);
      EXPECT_NEAR(p.trace(), dd - static_cast<double>(k), 1e-8);
      EXPECT_LE((p * sub.basis).norm(), 1e-10);
    }
  }
}

TEST(Projector, EigenvaluesAreZeroOrOne) {
  for (Eigen::Index d : {4, 16, 32}) {
    const auto sub = random_subspace(d, 2, static_cast<std::uint64_t>(d));
    const auto eig = oracle::jacobi_eigen(orthogonal_projector(sub).matrix);
    for (Eigen::Index i = 0; i < d; ++i) {
      const double v = eig.values(i);
      EXPECT_LE(std::min(std::abs(v), std::abs(v - 1.0)), 1e-8) << v;
    }
    EXPECT_EQ((eig.values.array() < 0.5).count(), 2);
  }
}

TEST(Project, DiagonalExample) {
  BiasSubspace sub;
  sub.basis = Vector::Unit(3, 0);
  sub.singular_values = Vector::Ones(1);
  const auto p = orthogonal_projector(sub);
  Matrix h(3, 1);
  h << 7, 2, -1;
  const auto out = project(p, EmbeddingMatrix::unlabeled(h));
  EXPECT_EQ(out.values, Matrix(Eigen::Vector3d(0, 2, -1)));
  EXPECT_EQ(project(p, out).values, out.values);
}

TEST(Project, NonExpansive) {
  const auto sub = random_subspace(32, 3, 17);
  const auto p = orthogonal_projector(sub);
  const Matrix h = oracle::random_matrix(32, 200, 18);
  const auto out = project(p, EmbeddingMatrix::unlabeled(h));
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    EXPECT_LE(out.values.col(j).norm(), h.col(j).norm() * (1.0 + 1e-15));
  }
}

TEST(Project, CarriesLabelsAndRejectsWrongDim) {
  const auto sub = random_subspace(4, 1, 3);
  const auto p = orthogonal_projector(sub);
  EmbeddingMatrix h(oracle::random_matrix(4, 2, 4),
                    {{Group::kNeutral, 0.5, "a"}, {Group::kExplicitB, std::nullopt, "b"}});
  EXPECT_EQ(project(p, h).labels, h.labels);
  EXPECT_THROW(project(p, EmbeddingMatrix::unlabeled(Matrix::Ones(5, 1))), Error);
}

TEST(Decompose, BiasColumnIsAllBias) {
  const auto sub = random_subspace(6, 2, 8);
  const auto h = EmbeddingMatrix::unlabeled(sub.basis.col(0));
  const auto parts = decompose(h, sub);
  EXPECT_LE((parts.bias_part.values - h.values).norm(), 1e-12);
  EXPECT_LE(parts.sem_part.values.norm(), 1e-12);
}

TEST(Decompose, OrthogonalColumnHasNoBias) {
  const auto sub = random_subspace(6, 2, 8);
  const Matrix h = orthogonal_projector(sub).matrix * oracle::random_matrix(6, 1, 9);
  EXPECT_LE(decompose(EmbeddingMatrix::unlabeled(h), sub).bias_part.values.norm(), 1e-12);
}

TEST(Decompose, ReconstructionOrthogonalityPythagoras) {
  const auto sub = random_subspace(12, 3, 30);
  const Matrix h = oracle::random_matrix(12, 100, 31);
  const auto parts = decompose(EmbeddingMatrix::unlabeled(h), sub);
  EXPECT_LE(testing::max_abs_diff(parts.bias_part.values + parts.sem_part.values, h), 1e-12);
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    EXPECT_LE(std::abs(parts.bias_part.values.col(j).dot(parts.sem_part.values.col(j))), 1e-10);
  }
  const Matrix projected = project(orthogonal_projector(sub), EmbeddingMatrix::unlabeled(h)).values;
  EXPECT_NEAR((h - projected).squaredNorm(), parts.bias_part.values.squaredNorm(),
              1e-10 * h.squaredNorm());
}

TEST(Decompose, SemanticDistanceBoundedByBiasEnergy) {
  const auto sub = random_subspace(16, 2, 40);
  // Columns with 1% of their energy in the bias subspace.
  const Matrix sem = orthogonal_projector(sub).matrix * oracle::random_matrix(16, 50, 41);
  Matrix h = sem;
  for (Eigen::Index j = 0; j < h.cols(); ++j) h.col(j) += 0.1 * sem.col(j).norm() * sub.basis.col(0);
  const Matrix projected = project(orthogonal_projector(sub), EmbeddingMatrix::unlabeled(h)).values;
  const double rho = 0.01 / 1.01;
  EXPECT_LE(semantic_distance(h, projected, DistanceKind::kCosine), rho + 1e-12);
}

}  // namespace
}  // namespace biopro
