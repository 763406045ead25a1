#include "biopro/projector.hpp"

#include "biopro/error.hpp"

#include <string>

namespace biopro {

std::string_view to_string(ProjectorKind kind) noexcept {
  return kind == ProjectorKind::kOrthogonal ? "orthogonal" : "calibrated";
}

ProjectorKind parse_projector_kind(std::string_view text) {
  if (text == "orthogonal") return ProjectorKind::kOrthogonal;
  if (text == "calibrated") return ProjectorKind::kCalibrated;
  fail(ErrorCode::kFormat, "unknown projector kind '" + std::string(text) + "'");
}

bool operator==(const Projector& a, const Projector& b) {
  return a.kind == b.kind && a.provenance == b.provenance &&
         a.matrix.rows() == b.matrix.rows() && a.matrix.cols() == b.matrix.cols() &&
         a.matrix == b.matrix;
}

}  // namespace biopro
