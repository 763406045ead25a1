#include "biopro/calibration.hpp"
#include "biopro/subspace.hpp"
#include "biopro/synthgen.hpp"

#include "matchers.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <Eigen/Cholesky>

#include <cmath>

namespace biopro {
namespace {

CalibrationProblem random_problem(Eigen::Index d, Eigen::Index m, double lambda, std::uint64_t seed) {
  const auto sub = fit_subspace(oracle::random_matrix(d, d + 4, seed), 2);
  const auto p_perp = orthogonal_projector(sub);
  const auto zs = EmbeddingMatrix::unlabeled(oracle::random_matrix(d, m, seed + 1));
  const auto zt = EmbeddingMatrix::unlabeled(oracle::random_matrix(d, m, seed + 2));
  return make_problem(p_perp, zs, zt, lambda);
}

CalibrationProblem scalar_problem() {
  CalibrationProblem p;
  p.p_perp = Matrix::Zero(1, 1);
  p.z_source = Matrix::Ones(1, 1);
  p.z_target = Matrix::Ones(1, 1);
  p.lambda_g = 1.0;
  return p;
}

TEST(Objective, ZeroAtPerpWithoutLambda) {
  auto prob = random_problem(6, 3, 0.0, 1);
  EXPECT_EQ(calibration_objective(prob.p_perp, prob), 0.0);
  EXPECT_TRUE(objective_gradient(prob.p_perp, prob).isZero(0.0));
}

TEST(Objective, ScalarHandEvaluation) {
  const auto prob = scalar_problem();
  const Matrix p = Matrix::Constant(1, 1, 0.5);
  EXPECT_DOUBLE_EQ(calibration_objective(p, prob), 0.5);
  EXPECT_DOUBLE_EQ(objective_gradient(p, prob)(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(closed_form_calibration(prob).matrix(0, 0), 0.5);
}

TEST(Objective, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto prob = random_problem(8, 5, 0.5 + static_cast<double>(seed), 10 * seed + 1);
    const Matrix p = oracle::random_matrix(8, 8, 10 * seed + 7);
    const Matrix fd = oracle::central_difference_gradient(
        [&](const Matrix& x) { return calibration_objective(x, prob); }, p, 1e-6);
    EXPECT_LE((objective_gradient(p, prob) - fd).cwiseAbs().maxCoeff(), 1e-4) << seed;
  }
}

TEST(ClosedForm, ZeroLambdaReturnsPerpExactly) {
  const auto prob = random_problem(10, 4, 0.0, 3);
  const auto p = closed_form_calibration(prob);
  EXPECT_LE((p.matrix - prob.p_perp).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ClosedForm, MatchesGradientDescent) {
  const auto prob = random_problem(16, 6, 1.0, 21);
  const auto p = closed_form_calibration(prob).matrix;
  const auto gd = oracle::gradient_descent_calibration(prob, 1e-3, 200000, 1e-10);
  EXPECT_LE((p - gd.p).norm() / p.norm(), 1e-6) << "iterations " << gd.iterations;
}

TEST(ClosedForm, StationaryForManyProblems) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    for (double lambda : {0.0, 0.1, 1.0, 10.0, 100.0}) {
      const auto prob = random_problem(12, 5, lambda, seed);
      const auto r = solve_calibration(prob);
      const double bound = kStationarityTolerance * (1.0 + r.projector.matrix.norm());
      EXPECT_LE(objective_gradient(r.projector.matrix, prob).norm(), bound);
      EXPECT_LE(r.gradient_residual, bound);
      EXPECT_NEAR(r.objective, calibration_objective(r.projector.matrix, prob), 1e-9);
      EXPECT_GE(r.smallest_pivot, 1.0 - 1e-10);
      EXPECT_EQ(r.projector.kind, ProjectorKind::kCalibrated);
    }
  }
}

TEST(ClosedForm, GlobalMinimumUnderPerturbation) {
  const auto prob = random_problem(8, 4, 3.0, 50);
  const Matrix p = closed_form_calibration(prob).matrix;
  const double best = calibration_objective(p, prob);
  std::uint64_t seed = 1000;
  for (double scale : {1e-3, 1e-2, 1e-1, 1.0}) {
    for (int i = 0; i < 50; ++i) {
      Matrix e = oracle::random_matrix(8, 8, seed++);
      e *= scale / e.norm();
      EXPECT_LE(best, calibration_objective(p + e, prob)) << scale;
    }
  }
}

TEST(ClosedForm, SystemMatrixPivotsAtLeastOne) {
  const auto prob = random_problem(16, 10, 7.5, 60);
  const Matrix a = Matrix::Identity(16, 16) +
                   prob.lambda_g * prob.z_source * prob.z_source.transpose();
  Eigen::LDLT<Matrix> ldlt(a);
  EXPECT_GE(ldlt.vectorD().minCoeff(), 1.0 - 1e-10);
}

TEST(ClosedForm, DistanceFromPerpGrowsWithLambda) {
  const auto base = random_problem(10, 4, 0.0, 70);
  double previous = -1.0;
  for (double lambda : {0.0, 0.1, 1.0, 10.0, 100.0}) {
    auto prob = base;
    prob.lambda_g = lambda;
    const double dist = (closed_form_calibration(prob).matrix - prob.p_perp).norm();
    EXPECT_GE(dist, previous - 1e-12) << lambda;
    previous = dist;
  }
}

TEST(ClosedForm, ProblemValidation) {
  auto prob = random_problem(4, 2, 1.0, 80);
  prob.lambda_g = -1.0;
  EXPECT_THROW(solve_calibration(prob), Error);
  prob = random_problem(4, 2, 1.0, 80);
  prob.z_target = Matrix::Ones(4, 3);
  EXPECT_THROW(solve_calibration(prob), Error);
  prob = random_problem(4, 2, 1.0, 80);
  prob.z_source = Matrix::Ones(5, 2);
  EXPECT_THROW(solve_calibration(prob), Error);
}

TEST(Directional, SymmetricDataGivesSameMatrix) {
  const auto prob = random_problem(6, 3, 2.0, 90);
  const Projector p_perp{prob.p_perp, ProjectorKind::kOrthogonal, {}};
  const auto z = EmbeddingMatrix::unlabeled(prob.z_source);
  const auto pair = directional_pair(p_perp, z, z, 2.0);
  EXPECT_EQ(pair.a_to_b.projector.matrix, pair.b_to_a.projector.matrix);
}

TEST(Directional, ZeroLambdaBothPerp) {
  const auto prob = random_problem(6, 3, 0.0, 91);
  const Projector p_perp{prob.p_perp, ProjectorKind::kOrthogonal, {}};
  const auto pair = directional_pair(p_perp, EmbeddingMatrix::unlabeled(prob.z_source),
                                     EmbeddingMatrix::unlabeled(prob.z_target), 0.0);
  EXPECT_LE((pair.a_to_b.projector.matrix - prob.p_perp).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((pair.b_to_a.projector.matrix - prob.p_perp).cwiseAbs().maxCoeff(), 1e-12);
}

struct Clusters {
  EmbeddingMatrix z_a;
  EmbeddingMatrix z_b;
  Projector p_perp;
  Vector probe;
};

// Two gendered clusters offset along a planted direction.
Clusters gendered_clusters(std::uint64_t seed) {
  auto cfg = config_with_random_directions(24, {3.0}, seed);
  cfg.n_pairs = 64;
  cfg.noise_sigma = 0.05;
  const auto pairs = generate_counterfactual_pairs(cfg).pairs;
  const auto sub = fit_subspace(difference_matrix(pairs), 1);
  return {pairs.side_a, pairs.side_b, orthogonal_projector(sub), cfg.bias_dirs[0].direction};
}

TEST(Directional, CalibrationMovesTowardTargetCentroid) {
  const auto c = gendered_clusters(5);
  const auto pair = directional_pair(c.p_perp, c.z_a, c.z_b, 10.0);
  const Vector target = oracle::centroid(c.z_b.values);
  const double before = oracle::mean_distance_to(c.z_a.values, target);
  const double after =
      oracle::mean_distance_to(apply_calibrated(pair.a_to_b.projector, c.z_a).values, target);
  EXPECT_LT(after, before);
}

TEST(Directional, BoundaryCrossingsGrowWithLambda) {
  const auto c = gendered_clusters(6);
  // Linear probe: sign of the planted-direction coordinate relative to the midpoint.
  const Vector mid = 0.5 * (oracle::centroid(c.z_a.values) + oracle::centroid(c.z_b.values));
  const double threshold = c.probe.dot(mid);
  const double sign_b = c.probe.dot(oracle::centroid(c.z_b.values)) > threshold ? 1.0 : -1.0;
  double previous = -1.0;
  for (double lambda : {0.0, 1.0, 10.0, 100.0}) {
    const auto p = solve_calibration(make_problem(c.p_perp, c.z_a, c.z_b, lambda)).projector;
    const Matrix out = apply_calibrated(p, c.z_a).values;
    double crossed = 0;
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      if (sign_b * (c.probe.dot(out.col(j)) - threshold) > 0) crossed += 1;
    }
    const double fraction = crossed / static_cast<double>(out.cols());
    EXPECT_GE(fraction, previous) << lambda;
    previous = fraction;
  }
}

TEST(Apply, Examples) {
  const Projector id{Matrix::Identity(3, 3), ProjectorKind::kCalibrated, {}};
  const auto h = EmbeddingMatrix::unlabeled(oracle::random_matrix(3, 4, 1));
  EXPECT_EQ(apply_calibrated(id, h).values, h.values);
  const Projector half{Matrix::Constant(1, 1, 0.5), ProjectorKind::kCalibrated, {}};
  EXPECT_EQ(apply_calibrated(half, EmbeddingMatrix::unlabeled(Matrix::Constant(1, 1, 4.0))).values(0, 0),
            2.0);
}

TEST(Apply, BrightnessProbeShiftGrowsWithLambda) {
  auto cfg = config_with_random_directions(32, {2.0}, 9);
  cfg.n_attribute = 400;
  cfg.noise_sigma = 0.02;
  cfg.attribute_dir = cfg.bias_dirs[0].direction;
  const auto set = generate_attribute_set(cfg);
  const Vector& dir = *cfg.attribute_dir;

  std::vector<Eigen::Index> light, dark;
  for (std::size_t j = 0; j < set.embeddings.count(); ++j) {
    (*set.embeddings.labels[j].attribute > 0.5 ? light : dark).push_back(static_cast<Eigen::Index>(j));
  }
  const auto n = static_cast<Eigen::Index>(std::min(light.size(), dark.size()));
  Matrix za(32, n), zb(32, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    za.col(j) = set.embeddings.values.col(light[static_cast<std::size_t>(j)]);
    zb.col(j) = set.embeddings.values.col(dark[static_cast<std::size_t>(j)]);
  }
  const auto sub = fit_subspace(za - zb, 1);
  const auto p_perp = orthogonal_projector(sub);
  const auto src = pool_columns(EmbeddingMatrix::unlabeled(za));
  const auto tgt = pool_columns(EmbeddingMatrix::unlabeled(zb));

  const double base = oracle::mean_probe(project(p_perp, set.embeddings).values, dir);
  std::vector<double> shifts;
  for (double lambda : {1.0, 100.0}) {
    const auto p = solve_calibration(make_problem(p_perp, src, tgt, lambda)).projector;
    shifts.push_back(std::abs(oracle::mean_probe(apply_calibrated(p, set.embeddings).values, dir) - base));
  }
  EXPECT_GT(shifts[1], shifts[0]);
}

TEST(Pool, ColumnMean) {
  Matrix z(2, 3);
  z << 1, 2, 3, 4, 5, 6;
  const auto pooled = pool_columns(EmbeddingMatrix::unlabeled(z));
  EXPECT_EQ(pooled.values, Matrix(Eigen::Vector2d(2, 5)));
}

}  // namespace
}  // namespace biopro
