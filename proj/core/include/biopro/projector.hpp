#pragma once

#include "biopro/embedding.hpp"

#include <cstdint>
#include <string>
#include <string_view>

namespace biopro {

enum class ProjectorKind { kOrthogonal, kCalibrated };

std::string_view to_string(ProjectorKind kind) noexcept;
ProjectorKind parse_projector_kind(std::string_view text);

struct Provenance {
  std::uint64_t subspace_checksum = 0;
  // Free-form "key=value;key=value" record of construction parameters.
  std::string parameters;

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// A d×d linear map applied to embeddings column-wise.
struct Projector {
  Matrix matrix;
  ProjectorKind kind = ProjectorKind::kOrthogonal;
  Provenance provenance;

  std::size_t dim() const noexcept { return static_cast<std::size_t>(matrix.rows()); }

  friend bool operator==(const Projector& a, const Projector& b);
};

}  // namespace biopro
