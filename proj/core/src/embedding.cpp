#include "biopro/embedding.hpp"

#include "biopro/error.hpp"

#include <cmath>
#include <string>

namespace biopro {

std::string_view to_string(Group group) noexcept {
  switch (group) {
    case Group::kNeutral: return "neutral";
    case Group::kExplicitA: return "explicit_a";
    case Group::kExplicitB: return "explicit_b";
    case Group::kUnlabeled: return "unlabeled";
  }
  return "unlabeled";
}

Group parse_group(std::string_view text) {
  if (text == "neutral") return Group::kNeutral;
  if (text == "explicit_a") return Group::kExplicitA;
  if (text == "explicit_b") return Group::kExplicitB;
  if (text == "unlabeled") return Group::kUnlabeled;
  fail(ErrorCode::kFormat, "unknown group tag '" + std::string(text) + "'");
}

bool is_explicit(Group group) noexcept {
  return group == Group::kExplicitA || group == Group::kExplicitB;
}

EmbeddingMatrix::EmbeddingMatrix(Matrix v, std::vector<LabelRecord> l)
    : values(std::move(v)), labels(std::move(l)) {}

EmbeddingMatrix EmbeddingMatrix::unlabeled(Matrix v) {
  std::vector<LabelRecord> labels(static_cast<std::size_t>(v.cols()));
  for (std::size_t j = 0; j < labels.size(); ++j) labels[j].source_id = std::to_string(j);
  return EmbeddingMatrix(std::move(v), std::move(labels));
}

std::optional<std::size_t> first_non_finite_column(const Matrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    if (!m.col(j).allFinite()) return static_cast<std::size_t>(j);
  }
  return std::nullopt;
}

void EmbeddingMatrix::validate() const {
  if (values.rows() <= 0) fail(ErrorCode::kValidation, "embedding dimension must be positive");
  if (labels.size() != count()) {
    fail(ErrorCode::kValidation, "label count " + std::to_string(labels.size()) +
                                     " does not match column count " + std::to_string(count()));
  }
  if (auto col = first_non_finite_column(values)) {
    fail(ErrorCode::kNonFinite, "column " + std::to_string(*col) + " contains a non-finite value");
  }
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j].attribute && !std::isfinite(*labels[j].attribute)) {
      fail(ErrorCode::kNonFinite, "label " + std::to_string(j) + " has a non-finite attribute");
    }
  }
}

EmbeddingMatrix EmbeddingMatrix::select(Group group) const {
  std::vector<Eigen::Index> keep;
  for (std::size_t j = 0; j < labels.size(); ++j) {
    if (labels[j].group == group) keep.push_back(static_cast<Eigen::Index>(j));
  }
  EmbeddingMatrix out;
  out.values.resize(values.rows(), static_cast<Eigen::Index>(keep.size()));
  out.labels.reserve(keep.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.values.col(static_cast<Eigen::Index>(i)) = values.col(keep[i]);
    out.labels.push_back(labels[static_cast<std::size_t>(keep[i])]);
  }
  return out;
}

bool operator==(const EmbeddingMatrix& a, const EmbeddingMatrix& b) {
  return a.values.rows() == b.values.rows() && a.values.cols() == b.values.cols() &&
         a.values == b.values && a.labels == b.labels;
}

}  // namespace biopro
