#include "biopro/selection.hpp"
#include "biopro/subspace.hpp"
#include "biopro/synthgen.hpp"

#include "matchers.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace biopro {
namespace {

using testing::bits_equal;

TEST(RandomOrthonormal, IsOrthonormalAndDeterministic) {
  const Matrix q = random_orthonormal(20, 5, 3);
  EXPECT_LE((q.transpose() * q - Matrix::Identity(5, 5)).norm(), 1e-12);
  EXPECT_TRUE(bits_equal(q, random_orthonormal(20, 5, 3)));
  EXPECT_FALSE(bits_equal(q, random_orthonormal(20, 5, 4)));
}

TEST(SynthConfig, Validation) {
  auto cfg = config_with_random_directions(8, {2.0, 1.0}, 1);
  EXPECT_NO_THROW(cfg.validate());
  cfg.bias_dirs[1].gap = 3.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = config_with_random_directions(8, {2.0}, 1);
  cfg.noise_sigma = -1;
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_THROW(config_with_random_directions(2, {3.0, 2.0, 1.0}, 1), Error);
}

TEST(Pairs, NoiselessDifferenceIsPlantedGap) {
  auto cfg = config_with_random_directions(16, {4.0}, 2);
  cfg.n_pairs = 30;
  const auto out = generate_counterfactual_pairs(cfg);
  const Matrix d = difference_matrix(out.pairs);
  const Vector expected = 4.0 * cfg.bias_dirs[0].direction;
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    EXPECT_LE((d.col(j) - expected).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Pairs, DifferenceNormsMatchLog) {
  auto cfg = config_with_random_directions(16, {4.0}, 3);
  cfg.n_pairs = 50;
  cfg.gap_jitter = 0.3;
  const auto out = generate_counterfactual_pairs(cfg);
  const Matrix d = difference_matrix(out.pairs);
  ASSERT_EQ(out.log.magnitudes.rows(), 50);
  for (Eigen::Index j = 0; j < d.cols(); ++j) {
    EXPECT_NEAR(d.col(j).norm(), std::abs(out.log.magnitudes(j, 0)), 1e-12);
    EXPECT_NEAR(std::abs(d.col(j).dot(cfg.bias_dirs[0].direction)), d.col(j).norm(), 1e-12);
  }
}

TEST(Pairs, Deterministic) {
  auto cfg = config_with_random_directions(12, {3.0, 1.0}, 4);
  cfg.n_pairs = 40;
  cfg.noise_sigma = 0.2;
  const auto a = generate_counterfactual_pairs(cfg);
  const auto b = generate_counterfactual_pairs(cfg);
  EXPECT_TRUE(bits_equal(a.pairs.side_a.values, b.pairs.side_a.values));
  EXPECT_TRUE(bits_equal(a.pairs.side_b.values, b.pairs.side_b.values));
  EXPECT_EQ(a.log.to_tsv(), b.log.to_tsv());
  EXPECT_EQ(a.pairs.side_a.labels, b.pairs.side_a.labels);
}

TEST(Pairs, NoisyRecoveryOfTopDirection) {
  auto cfg = config_with_random_directions(64, {4.0}, 7);
  cfg.n_pairs = 500;
  cfg.noise_sigma = 0.1;
  const auto pairs = generate_counterfactual_pairs(cfg).pairs;
  const auto sub = fit_subspace(difference_matrix(pairs), 1);
  EXPECT_GE(std::abs(sub.basis.col(0).dot(cfg.bias_dirs[0].direction)), 0.99);
}

TEST(Pairs, NoiselessRecoveryOfAllDirections) {
  const std::vector<double> gaps{4.0, 2.0, 1.0};
  auto cfg = config_with_random_directions(32, gaps, 8);
  cfg.n_pairs = 500;
  const auto pairs = generate_counterfactual_pairs(cfg).pairs;
  const auto sub = fit_subspace(difference_matrix(pairs), 3);
  const double sqrt_n = std::sqrt(500.0);
  for (std::size_t i = 0; i < gaps.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    EXPECT_NEAR(sub.singular_values(col), gaps[i] * sqrt_n, 1e-8 * gaps[i] * sqrt_n);
    EXPECT_GE(std::abs(sub.basis.col(col).dot(cfg.bias_dirs[i].direction)), 1.0 - 1e-10);
  }
}

TEST(Labeled, PartitionAndScores) {
  auto cfg = config_with_random_directions(16, {3.0}, 9);
  cfg.n_neutral = 70;
  cfg.n_explicit = 50;
  const auto set = generate_labeled_set(cfg);
  ASSERT_EQ(set.embeddings.count(), 120u);
  std::size_t neutral = 0, explicit_ = 0;
  for (const auto& l : set.embeddings.labels) {
    neutral += l.group == Group::kNeutral ? 1 : 0;
    explicit_ += is_explicit(l.group) ? 1 : 0;
  }
  EXPECT_EQ(neutral, 70u);
  EXPECT_EQ(explicit_, 50u);

  BiasSubspace sub;
  sub.basis = cfg.bias_dirs[0].direction;
  sub.singular_values = Vector::Ones(1);
  const auto scores = projection_scores(set.embeddings, sub, 0);
  for (std::size_t j = 0; j < scores.size(); ++j) {
    EXPECT_NEAR(scores[j], std::abs(set.log.magnitudes(static_cast<Eigen::Index>(j), 0)), 1e-10);
  }
}

TEST(Labeled, SignSetsExplicitSide) {
  auto cfg = config_with_random_directions(8, {3.0}, 10);
  cfg.n_neutral = 0;
  cfg.n_explicit = 60;
  const auto set = generate_labeled_set(cfg);
  for (std::size_t j = 0; j < set.embeddings.count(); ++j) {
    const double m = set.log.magnitudes(static_cast<Eigen::Index>(j), 0);
    EXPECT_EQ(set.embeddings.labels[j].group, m > 0 ? Group::kExplicitA : Group::kExplicitB);
  }
}

TEST(Labeled, ConcentratedNeutralScoresAreSmall) {
  auto cfg = config_with_random_directions(16, {3.0}, 11);
  cfg.n_neutral = 100;
  cfg.n_explicit = 10;
  cfg.noise_sigma = 0.05;
  cfg.neutral_score_dist = {0.0, 1e-6, 0.0};
  const auto set = generate_labeled_set(cfg);
  BiasSubspace sub;
  sub.basis = cfg.bias_dirs[0].direction;
  sub.singular_values = Vector::Ones(1);
  const auto scores = projection_scores(set.embeddings, sub, 0);
  for (std::size_t j = 0; j < 100; ++j) EXPECT_LT(scores[j], 3 * 0.05 + 1e-5);
}

TEST(Attribute, NoiselessProbeReadsAttribute) {
  auto cfg = config_with_random_directions(16, {1.0}, 12);
  cfg.n_attribute = 50;
  cfg.attribute_dir = cfg.bias_dirs[0].direction;
  const auto set = generate_attribute_set(cfg);
  for (std::size_t j = 0; j < 50; ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    const Vector planted = set.embeddings.values.col(col) - set.log.bases.col(col);
    EXPECT_NEAR(cfg.attribute_dir->dot(planted), *set.embeddings.labels[j].attribute, 1e-12);
    EXPECT_EQ(set.log.attributes[j], set.embeddings.labels[j].attribute);
  }
}

TEST(Attribute, UniformMean) {
  auto cfg = config_with_random_directions(8, {1.0}, 9);
  cfg.seed = 9;
  cfg.n_attribute = 1000;
  cfg.attribute_dir = cfg.bias_dirs[0].direction;
  const auto set = generate_attribute_set(cfg);
  double sum = 0;
  for (const auto& l : set.embeddings.labels) {
    ASSERT_TRUE(l.attribute.has_value());
    EXPECT_GE(*l.attribute, 0.0);
    EXPECT_LE(*l.attribute, 1.0);
    sum += *l.attribute;
  }
  EXPECT_NEAR(sum / 1000.0, 0.5, 0.03);
}

TEST(Attribute, RequiresDirection) {
  auto cfg = config_with_random_directions(8, {1.0}, 9);
  EXPECT_THROW(generate_attribute_set(cfg), Error);
}

}  // namespace
}  // namespace biopro
