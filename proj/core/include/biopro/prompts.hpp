#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biopro {

/// Prompt templates with [group] / [profession] / [object] slots plus the
/// category lists they are expanded over.
struct TemplateCatalog {
  std::vector<std::string> profession_templates;
  std::vector<std::string> scene_templates;
  std::vector<std::string> groups_gender;  // a-variant, b-variant, neutral
  std::vector<std::string> groups_scene;   // a-variant, b-variant
  std::vector<std::string> training_professions;
  std::vector<std::string> testing_professions;
  std::vector<std::string> training_objects;
  std::vector<std::string> testing_objects;
  // Instruction strings used by prompting baselines, keyed by name.
  std::vector<std::pair<std::string, std::string>> baseline_prompts;

  /// Sectioned text: `[section]` headers followed by one entry per line;
  /// `#` comments and blank lines are skipped. baseline_prompts entries are
  /// `name<TAB>text`.
  static TemplateCatalog parse(std::string_view text);
  static TemplateCatalog load(const std::filesystem::path& path);
  std::string to_string() const;

  /// The catalog compiled into the library (identical to data/catalog.txt).
  static const TemplateCatalog& shipped();
  static std::string_view shipped_text();
};

enum class PromptMode { kGender, kScene };
enum class PromptSplit { kTrain, kTest };

PromptMode parse_prompt_mode(std::string_view text);
PromptSplit parse_prompt_split(std::string_view text);

struct PromptTuple {
  std::string prompt_a;
  std::string prompt_b;
  std::optional<std::string> neutral;  // gender mode only
  std::string category;

  friend bool operator==(const PromptTuple&, const PromptTuple&) = default;
};

/// Replaces every `[slot]` with its value. An article "a" directly before a
/// slot becomes "an" when the value starts with a vowel letter. Throws
/// kValidation on a slot name missing from `values`.
std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values);

/// Template-major, category-minor expansion; no deduplication.
std::vector<PromptTuple> expand(const TemplateCatalog& catalog, PromptMode mode, PromptSplit split);

/// prompt_a, prompt_b, neutral (empty in scene mode), category; tab-separated
/// with a one-line header.
std::string expansion_to_tsv(const std::vector<PromptTuple>& tuples);

struct CatalogViolation {
  enum class Kind { kDisjointness, kSlot, kDuplicate, kGroups };
  Kind kind;
  std::string detail;
};

std::string_view to_string(CatalogViolation::Kind kind) noexcept;

/// Report-only check: train/test overlap, slot counts, duplicate categories,
/// group list sizes.
std::vector<CatalogViolation> validate_catalog(const TemplateCatalog& catalog);

}  // namespace biopro
