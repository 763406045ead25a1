#pragma once

#include "biopro/embedding.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biopro {

struct CaptionFlag {
  std::string source_id;
  Group group = Group::kNeutral;
  bool gendered_word_present = false;
  std::optional<bool> predicted_gender_correct;  // explicit groups only
};

struct CaptionFlagSet {
  std::vector<CaptionFlag> records;

  void validate() const;

  /// Tab-separated with the header
  /// `source_id  group  gendered_word_present  predicted_gender_correct`;
  /// booleans are 0/1, the last column may be empty.
  static CaptionFlagSet parse(std::string_view text);
  static CaptionFlagSet load(const std::filesystem::path& path);
  std::string to_string() const;
};

struct CategoryCounts {
  std::string category_id;
  long long n_a = 0;
  long long n_b = 0;
  long long total = 0;  // C, generations per category
  long long explicit_mismatches = 0;
  long long explicit_total = 0;
};

struct GenerationCountSet {
  std::vector<CategoryCounts> categories;

  void validate() const;
  GenerationCountSet filter(const std::vector<std::string>& category_ids) const;

  /// Tab-separated with the header
  /// `category_id  n_a  n_b  total  explicit_mismatches  explicit_total`.
  static GenerationCountSet parse(std::string_view text);
  static GenerationCountSet load(const std::filesystem::path& path);
  std::string to_string() const;
};

enum class GroupFilter { kNeutral, kExplicit, kExplicitA, kExplicitB };

/// Percentage of captions in the group that contain a gendered word.
double bias_rate(const CaptionFlagSet& flags, GroupFilter filter);

/// √(BR_n² + (BR_e − BR_e_base)²); inputs must lie in [0, 100].
double composite_bias_rate(double br_n, double br_e, double br_e_base);

struct SkewResult {
  std::vector<double> per_category;
  double mean = 0.0;
};

/// 100·max(n_a, n_b)/C per category and the unweighted mean. With
/// `as_fraction` the values are left in [0, 1].
SkewResult skew(const GenerationCountSet& counts, bool as_fraction = false);

/// 100·Σ explicit_mismatches / Σ explicit_total.
double misclassification_rate(const GenerationCountSet& counts);

enum class DistanceKind { kCosine, kFrobeniusRel };

std::string_view to_string(DistanceKind kind) noexcept;
DistanceKind parse_distance_kind(std::string_view text);

/// cosine: mean over columns of 1 − cos(h_j, h̃_j);
/// frobenius_rel: ‖H − H̃‖_F / ‖H‖_F.
double semantic_distance(const Matrix& h, const Matrix& h_tilde, DistanceKind kind);

double faithfulness_ratio(double prob_before, double prob_after);

struct CategoryBalance {
  std::string category_id;
  long long n_a = 0;
  long long n_b = 0;
};

/// Captioning reports fill the BR fields, generation reports the skew/MR
/// fields; absent values stay empty.
struct BiasReport {
  std::optional<double> br_n;
  std::optional<double> br_e;
  std::optional<double> br_e_base;
  std::optional<double> cbr;
  std::optional<double> skew_a;
  std::optional<double> skew_b;
  std::optional<double> skew;
  std::optional<double> mr;
  std::optional<double> semantic_distance;
  std::vector<CategoryBalance> balances;

  /// Percentages in [0, 100] and cbr re-derivable from the BR fields.
  void validate() const;

  std::string to_keyvalue() const;
  /// Single-line JSON summary.
  std::string to_summary_line() const;
  static BiasReport from_keyvalue(std::string_view text);
};

BiasReport captioning_report(const CaptionFlagSet& flags, double br_e_base);
BiasReport generation_report(const GenerationCountSet& counts,
                             const std::vector<std::string>& stereotype_a = {},
                             const std::vector<std::string>& stereotype_b = {});

}  // namespace biopro
