#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biopro {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Group { kNeutral, kExplicitA, kExplicitB, kUnlabeled };

std::string_view to_string(Group group) noexcept;
Group parse_group(std::string_view text);

bool is_explicit(Group group) noexcept;

struct LabelRecord {
  Group group = Group::kUnlabeled;
  std::optional<double> attribute;
  std::string source_id;

  friend bool operator==(const LabelRecord&, const LabelRecord&) = default;
};

/// A d×n collection of embeddings, one per column, with a label per column.
///
/// Values are always held in double precision; on-disk f32 files are widened
/// on load.
struct EmbeddingMatrix {
  Matrix values;
  std::vector<LabelRecord> labels;

  EmbeddingMatrix() = default;
  EmbeddingMatrix(Matrix v, std::vector<LabelRecord> l);

  /// Unlabeled columns with source ids "0", "1", ...
  static EmbeddingMatrix unlabeled(Matrix v);

  std::size_t dim() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t count() const noexcept { return static_cast<std::size_t>(values.cols()); }

  /// Throws kValidation / kNonFinite when an invariant is broken. The
  /// non-finite diagnostic names the first offending column.
  void validate() const;

  /// Columns whose label group matches.
  EmbeddingMatrix select(Group group) const;

  friend bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b);
};

// Index of the first column holding a NaN or Inf, if any.
std::optional<std::size_t> first_non_finite_column(const Matrix& m);

}  // namespace biopro
