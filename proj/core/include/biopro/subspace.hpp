#pragma once

#include "biopro/embedding.hpp"
#include "biopro/projector.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace biopro {

/// Two aligned embedding sets differing only in the bias attribute.
/// Column j of side_a and side_b describe the same source.
struct CounterfactualPairSet {
  EmbeddingMatrix side_a;
  EmbeddingMatrix side_b;

  void validate() const;
};

inline constexpr double kOrthonormalityTolerance = 1e-10;

struct BiasSubspace {
  Matrix basis;            // d×k, orthonormal columns
  Vector singular_values;  // k, non-increasing
  // Indices (0-based) of basis columns whose singular value is below
  // 1e-12·σ₁; set when the difference matrix has rank < k.
  std::vector<std::size_t> weak_directions;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(basis.rows()); }
  std::size_t rank() const noexcept { return static_cast<std::size_t>(basis.cols()); }

  bool rank_deficient() const noexcept { return !weak_directions.empty(); }
  // ‖UᵀU − I‖_F
  double orthonormality_residual() const;
  // FNV-1a over the f64 bytes of the basis, used as projector provenance.
  std::uint64_t checksum() const;
};

/// side_a − side_b, column by column. No centering.
Matrix difference_matrix(const CounterfactualPairSet& pairs);

/// Top-k left singular vectors of D. Each basis column is flipped so that its
/// largest-magnitude entry is positive.
BiasSubspace fit_subspace(const Matrix& difference, std::size_t k);

/// P = I − U Uᵀ. Refuses a basis whose orthonormality residual exceeds
/// kOrthonormalityTolerance, and verifies idempotence, symmetry and P·U ≈ 0.
Projector orthogonal_projector(const BiasSubspace& subspace);

/// Applies p to every column; labels are carried through.
EmbeddingMatrix project(const Projector& p, const EmbeddingMatrix& h);

struct Decomposition {
  EmbeddingMatrix bias_part;  // U Uᵀ H
  EmbeddingMatrix sem_part;   // H − U Uᵀ H
};

Decomposition decompose(const EmbeddingMatrix& h, const BiasSubspace& subspace);

}  // namespace biopro
