#include "biopro/reference_config.hpp"

#include "biopro/error.hpp"
#include "biopro/keyvalue.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace biopro {
namespace detail {
extern const std::string_view kShippedReferenceConfig;
}  // namespace detail

namespace {

// Model names contain dots ("llava-1.5"), so keys are split from the right.
std::pair<std::string, std::string> split_last(std::string_view text, std::string_view key) {
  const auto pos = text.rfind('.');
  if (pos == std::string_view::npos || pos == 0 || pos + 1 == text.size()) {
    fail(ErrorCode::kFormat, "reference config key '" + std::string(key) + "' is malformed");
  }
  return {std::string(text.substr(0, pos)), std::string(text.substr(pos + 1))};
}

int parse_int(std::string_view text, std::string_view key) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    fail(ErrorCode::kFormat, "reference config key '" + std::string(key) + "': bad integer");
  }
  return v;
}

double parse_finite(std::string_view text, std::string_view key) {
  const double v = parse_double(text);
  if (!std::isfinite(v) || v < 0.0) {
    fail(ErrorCode::kFormat, "reference config key '" + std::string(key) +
                                 "': expected a non-negative finite number");
  }
  return v;
}

SensitivityEntry& sensitivity_row(std::vector<SensitivityEntry>& rows, int k, double lambda_c) {
  for (auto& r : rows) {
    if (r.k == k && r.lambda_c == lambda_c) return r;
  }
  rows.push_back({k, lambda_c, std::nan(""), std::nan("")});
  return rows.back();
}

}  // namespace

std::string_view to_string(StereotypeGroup group) noexcept {
  switch (group) {
    case StereotypeGroup::kMale: return "male";
    case StereotypeGroup::kFemale: return "female";
    case StereotypeGroup::kScene: return "scene";
  }
  return "?";
}

StereotypeGroup parse_stereotype_group(std::string_view text) {
  if (text == "male") return StereotypeGroup::kMale;
  if (text == "female") return StereotypeGroup::kFemale;
  if (text == "scene") return StereotypeGroup::kScene;
  fail(ErrorCode::kFormat, "unknown stereotype group '" + std::string(text) + "'");
}

std::optional<double> ReferenceConfig::find_delta_c(std::string_view model, double lambda_c) const {
  for (const auto& e : delta_c) {
    if (e.model == model && e.lambda_c == lambda_c) return e.delta_c;
  }
  return std::nullopt;
}

std::optional<double> ReferenceConfig::find_lambda_g(std::string_view model,
                                                     std::string_view category) const {
  for (const auto& e : lambda_g) {
    if (e.model == model && e.category == category) return e.lambda_g;
  }
  return std::nullopt;
}

std::optional<StereotypeGroup> ReferenceConfig::find_group(std::string_view category) const {
  for (const auto& [c, g] : groups) {
    if (c == category) return g;
  }
  return std::nullopt;
}

std::vector<std::string> ReferenceConfig::models() const {
  std::vector<std::string> out;
  auto add = [&](const std::string& m) {
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  };
  for (const auto& e : delta_c) add(e.model);
  for (const auto& e : lambda_g) add(e.model);
  return out;
}

ReferenceConfig ReferenceConfig::parse(std::string_view text) {
  const auto kv = KeyValue::parse(text);
  ReferenceConfig cfg;
  for (const auto& [key, value] : kv.entries()) {
    const auto dot = key.find('.');
    if (dot == std::string::npos) {
      fail(ErrorCode::kFormat, "reference config key '" + key + "' has no section");
    }
    const std::string_view section = std::string_view(key).substr(0, dot);
    const std::string_view rest = std::string_view(key).substr(dot + 1);
    if (section == "delta_c") {
      auto [model, lc] = split_last(rest, key);
      cfg.delta_c.push_back({model, parse_finite(lc, key), parse_finite(value, key)});
    } else if (section == "lambda_g") {
      auto [model, category] = split_last(rest, key);
      cfg.lambda_g.push_back({model, category, parse_finite(value, key)});
    } else if (section == "group") {
      cfg.groups.emplace_back(std::string(rest), parse_stereotype_group(value));
    } else if (section == "sensitivity") {
      const auto parts = split(rest, '.');
      if (parts.size() != 3 || (parts[2] != "br_n" && parts[2] != "br_e")) {
        fail(ErrorCode::kFormat, "reference config key '" + key + "' is malformed");
      }
      auto& row = sensitivity_row(cfg.sensitivity, parse_int(parts[0], key), parse_finite(parts[1], key));
      (parts[2] == "br_n" ? row.br_n : row.br_e) = parse_finite(value, key);
    } else {
      fail(ErrorCode::kFormat, "reference config key '" + key + "' has unknown section");
    }
  }
  for (const auto& r : cfg.sensitivity) {
    if (std::isnan(r.br_n) || std::isnan(r.br_e)) {
      fail(ErrorCode::kFormat, "sensitivity row (" + std::to_string(r.k) + ", " +
                                   format_double(r.lambda_c) + ") is missing a rate");
    }
  }
  return cfg;
}

ReferenceConfig ReferenceConfig::load(const std::filesystem::path& path) {
  return parse(read_text_file(path));
}

std::string_view ReferenceConfig::shipped_text() { return detail::kShippedReferenceConfig; }

const ReferenceConfig& ReferenceConfig::shipped() {
  static const ReferenceConfig cfg = parse(detail::kShippedReferenceConfig);
  return cfg;
}

}  // namespace biopro
