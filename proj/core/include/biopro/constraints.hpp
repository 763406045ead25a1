#pragma once

#include "biopro/metrics.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace biopro {

/// Numeric stand-ins for the "≈ 0" / "≈ 1" / "≤ ε" conditions of the
/// selective-debiasing constraint systems. Defaults are toolkit choices.
struct ConstraintBudget {
  double neutral_bias_max = 25.0;  // percent
  double band_low = 0.8;
  double band_high = 1.25;
  double epsilon_semantic = 0.05;
  DistanceKind distance_kind = DistanceKind::kFrobeniusRel;

  void validate() const;

  static ConstraintBudget from_keyvalue(std::string_view text);
  static ConstraintBudget load(const std::filesystem::path& path);
  // The budget_default.txt file compiled into the library.
  static ConstraintBudget shipped();
  std::string to_keyvalue() const;
};

struct ConstraintCheck {
  std::string name;
  double value = 0.0;
  bool pass = false;
};

struct AuditResult {
  std::vector<ConstraintCheck> checks;  // always three, in a fixed order
  bool verdict = false;                 // conjunction of the checks

  std::string to_text() const;
  std::string to_summary_line() const;
};

/// neutral_fairness: br_n ≤ neutral_bias_max;
/// explicit_faithfulness: br_e / br_e_base inside the band;
/// semantic: dist ≤ epsilon_semantic.
AuditResult audit_captioning(const BiasReport& report, double dist, const ConstraintBudget& budget);

/// balance: every category's n_a / n_b inside the band;
/// explicit_faithfulness: (100 − MR)/100 inside the band;
/// semantic: dist ≤ epsilon_semantic.
AuditResult audit_generation(const BiasReport& report, double dist, const ConstraintBudget& budget);

}  // namespace biopro
