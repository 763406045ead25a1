#include "biopro/constraints.hpp"

#include "biopro/error.hpp"
#include "biopro/keyvalue.hpp"

#include <cmath>
#include <limits>

namespace biopro {
namespace detail {
extern const std::string_view kShippedBudget;
}  // namespace detail

namespace {

bool in_band(double v, const ConstraintBudget& b) { return v >= b.band_low && v <= b.band_high; }

AuditResult conclude(std::vector<ConstraintCheck> checks) {
  AuditResult out;
  out.verdict = true;
  for (const auto& c : checks) out.verdict = out.verdict && c.pass;
  out.checks = std::move(checks);
  return out;
}

double require(const std::optional<double>& v, const char* name) {
  if (!v) fail(ErrorCode::kValidation, std::string("report is missing ") + name);
  return *v;
}

}  // namespace

void ConstraintBudget::validate() const {
  if (!(band_low <= 1.0 && 1.0 <= band_high)) {
    fail(ErrorCode::kValidation, "faithfulness band must contain 1");
  }
  if (!(neutral_bias_max >= 0.0) || !(band_low >= 0.0) || !(epsilon_semantic >= 0.0)) {
    fail(ErrorCode::kValidation, "budget tolerances must be non-negative");
  }
}

ConstraintBudget ConstraintBudget::from_keyvalue(std::string_view text) {
  const auto kv = KeyValue::parse(text);
  ConstraintBudget b;
  if (kv.contains("neutral_bias_max")) b.neutral_bias_max = kv.get_double("neutral_bias_max");
  if (kv.contains("band_low")) b.band_low = kv.get_double("band_low");
  if (kv.contains("band_high")) b.band_high = kv.get_double("band_high");
  if (kv.contains("epsilon_semantic")) b.epsilon_semantic = kv.get_double("epsilon_semantic");
  if (kv.contains("distance_kind")) b.distance_kind = parse_distance_kind(kv.get("distance_kind"));
  b.validate();
  return b;
}

ConstraintBudget ConstraintBudget::load(const std::filesystem::path& path) {
  return from_keyvalue(read_text_file(path));
}

ConstraintBudget ConstraintBudget::shipped() { return from_keyvalue(detail::kShippedBudget); }

std::string ConstraintBudget::to_keyvalue() const {
  KeyValue kv;
  kv.set("neutral_bias_max", neutral_bias_max);
  kv.set("band_low", band_low);
  kv.set("band_high", band_high);
  kv.set("epsilon_semantic", epsilon_semantic);
  kv.set("distance_kind", std::string(to_string(distance_kind)));
  return kv.to_string();
}

std::string AuditResult::to_text() const {
  std::string out;
  for (const auto& c : checks) {
    out += c.name + "\t" + format_double(c.value) + "\t" + (c.pass ? "PASS" : "FAIL") + "\n";
  }
  out += std::string("verdict\t") + (verdict ? "PASS" : "FAIL") + "\n";
  return out;
}

std::string AuditResult::to_summary_line() const {
  std::string out = "{";
  for (const auto& c : checks) out += "\"" + c.name + "\":" + (c.pass ? "true" : "false") + ",";
  out += std::string("\"verdict\":") + (verdict ? "true" : "false") + "}";
  return out;
}

AuditResult audit_captioning(const BiasReport& report, double dist, const ConstraintBudget& budget) {
  budget.validate();
  const double br_n = require(report.br_n, "br_n");
  const double br_e = require(report.br_e, "br_e");
  const double br_e_base = require(report.br_e_base, "br_e_base");
  if (!std::isfinite(dist)) fail(ErrorCode::kValidation, "semantic distance is not finite");

  const double ratio = br_e_base > 0.0 ? br_e / br_e_base
                                       : (br_e == 0.0 ? 1.0 : std::numeric_limits<double>::infinity());
  return conclude({
      {"neutral_fairness", br_n, br_n <= budget.neutral_bias_max},
      {"explicit_faithfulness", ratio, in_band(ratio, budget)},
      {"semantic", dist, dist <= budget.epsilon_semantic},
  });
}

AuditResult audit_generation(const BiasReport& report, double dist, const ConstraintBudget& budget) {
  budget.validate();
  const double mr = require(report.mr, "mr");
  if (report.balances.empty()) fail(ErrorCode::kValidation, "report has no category balances");
  if (!std::isfinite(dist)) fail(ErrorCode::kValidation, "semantic distance is not finite");

  // The most extreme category decides; 0/0 (no detections) counts as unbalanced.
  bool balanced = true;
  double worst = 1.0;
  for (const auto& b : report.balances) {
    double ratio = std::numeric_limits<double>::infinity();
    if (b.n_b > 0) ratio = static_cast<double>(b.n_a) / static_cast<double>(b.n_b);
    const bool ok = b.n_b > 0 && in_band(ratio, budget);
    if (std::abs(std::log(ratio)) > std::abs(std::log(worst))) worst = ratio;
    balanced = balanced && ok;
  }
  const double faithful = (100.0 - mr) / 100.0;
  return conclude({
      {"balance", worst, balanced},
      {"explicit_faithfulness", faithful, in_band(faithful, budget)},
      {"semantic", dist, dist <= budget.epsilon_semantic},
  });
}

}  // namespace biopro
