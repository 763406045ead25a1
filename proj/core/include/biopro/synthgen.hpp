#pragma once

#include "biopro/embedding.hpp"
#include "biopro/skew_normal.hpp"
#include "biopro/subspace.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace biopro {

struct PlantedDirection {
  Vector direction;  // unit norm
  double gap = 1.0;  // full counterfactual gap along the direction
};

struct SynthConfig {
  std::size_t d = 64;
  std::size_t n_pairs = 500;
  std::size_t n_neutral = 500;
  std::size_t n_explicit = 500;
  std::size_t n_attribute = 500;
  std::vector<PlantedDirection> bias_dirs;  // orthonormal, gaps strictly decreasing
  double noise_sigma = 0.0;
  // Per-pair relative gap jitter: g_ij = g_i·(1 + jitter·u), u ~ U(−1, 1).
  double gap_jitter = 0.0;
  // Standard deviation of the semantic (complement-space) content.
  double semantic_scale = 1.0;
  SkewNormalParams neutral_score_dist{0.5, 0.5, 2.0};
  SkewNormalParams explicit_score_dist{6.0, 1.5, 2.0};
  std::optional<Vector> attribute_dir;
  double attribute_lo = 0.0;
  double attribute_hi = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

/// `count` orthonormal d-vectors drawn from the seed (QR of a Gaussian
/// matrix, sign-normalised so each column's largest entry is positive).
Matrix random_orthonormal(std::size_t d, std::size_t count, std::uint64_t seed);

/// Single- or multi-direction config with random orthonormal directions and
/// the given (strictly decreasing) gaps.
SynthConfig config_with_random_directions(std::size_t d, const std::vector<double>& gaps,
                                          std::uint64_t seed);

/// Ground truth recorded while generating. Row j of `magnitudes` holds the
/// signed component planted along each bias direction for column j.
struct GeneratorLog {
  std::vector<std::string> column_ids;
  Matrix magnitudes;
  std::vector<std::optional<double>> attributes;
  Matrix bases;  // d×n semantic base vectors

  std::string to_tsv() const;
};

struct SyntheticPairs {
  CounterfactualPairSet pairs;
  GeneratorLog log;
};

struct SyntheticSet {
  EmbeddingMatrix embeddings;
  GeneratorLog log;
};

/// side_a = base + Σ s·g/2·v + noise, side_b = base − Σ s·g/2·v + noise, with
/// each base drawn in the orthogonal complement of the planted directions.
/// s = +1 on the first direction; direction i uses the Walsh sign
/// (−1)^popcount(i & j) for pair j, so each planted direction is its own
/// singular direction with σ_i = g_i·√n exactly when n is a multiple of the
/// next power of two at or above the direction count.
SyntheticPairs generate_counterfactual_pairs(const SynthConfig& cfg);

/// n_neutral neutral columns followed by n_explicit explicit ones. Column j
/// carries s_j·m_j·(g_i/g_0) along direction i, where m_j is drawn from the
/// group's score distribution (absolute value) and s_j = ±1; explicit
/// columns with s_j = +1 are explicit_a, the rest explicit_b.
SyntheticSet generate_labeled_set(const SynthConfig& cfg);

/// Column j = base_j + a_j·attribute_dir + noise with a_j ~ U(lo, hi)
/// stored in the label attribute; n_attribute columns.
SyntheticSet generate_attribute_set(const SynthConfig& cfg);

}  // namespace biopro
