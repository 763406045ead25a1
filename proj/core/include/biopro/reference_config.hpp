#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace biopro {

enum class StereotypeGroup { kMale, kFemale, kScene };

std::string_view to_string(StereotypeGroup group) noexcept;
StereotypeGroup parse_stereotype_group(std::string_view text);

struct DeltaEntry {
  std::string model;
  double lambda_c = 0.0;
  double delta_c = 0.0;
};

struct LambdaGEntry {
  std::string model;
  std::string category;
  double lambda_g = 0.0;
};

struct SensitivityEntry {
  int k = 0;
  double lambda_c = 0.0;
  double br_n = 0.0;
  double br_e = 0.0;
};

/// Published hyperparameters shipped as data. Keys:
///   delta_c.<model>.<lambda_c>, lambda_g.<model>.<category>,
///   group.<category>, sensitivity.<k>.<lambda_c>.{br_n,br_e}
struct ReferenceConfig {
  std::vector<DeltaEntry> delta_c;
  std::vector<LambdaGEntry> lambda_g;
  std::vector<std::pair<std::string, StereotypeGroup>> groups;
  std::vector<SensitivityEntry> sensitivity;

  std::optional<double> find_delta_c(std::string_view model, double lambda_c) const;
  std::optional<double> find_lambda_g(std::string_view model, std::string_view category) const;
  std::optional<StereotypeGroup> find_group(std::string_view category) const;
  std::vector<std::string> models() const;

  static ReferenceConfig parse(std::string_view text);
  static ReferenceConfig load(const std::filesystem::path& path);
  static const ReferenceConfig& shipped();
  static std::string_view shipped_text();
};

}  // namespace biopro
