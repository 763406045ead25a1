#include "biopro/metrics.hpp"

#include "biopro/error.hpp"
#include "biopro/keyvalue.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace biopro {
namespace {

long long parse_count(std::string_view text, std::size_t line) {
  text = trim(text);
  long long value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    fail(ErrorCode::kFormat, "line " + std::to_string(line) + ": not an integer: '" +
                                 std::string(text) + "'");
  }
  return value;
}

bool parse_flag(std::string_view text, std::size_t line) {
  text = trim(text);
  if (text == "1" || text == "true") return true;
  if (text == "0" || text == "false") return false;
  fail(ErrorCode::kFormat, "line " + std::to_string(line) + ": not a 0/1 flag: '" +
                               std::string(text) + "'");
}

// Data lines of a tab-separated file after its one-line header.
std::vector<std::pair<std::size_t, std::vector<std::string>>> tsv_rows(std::string_view text,
                                                                       std::size_t columns) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;
  const auto lines = split(text, '\n');
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string_view line = lines[i];
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (trim(line).empty()) continue;
    auto fields = split(line, '\t');
    if (fields.size() != columns) {
      fail(ErrorCode::kFormat, "line " + std::to_string(i + 1) + ": expected " +
                                   std::to_string(columns) + " tab-separated fields, got " +
                                   std::to_string(fields.size()));
    }
    rows.emplace_back(i + 1, std::move(fields));
  }
  return rows;
}

void check_percentage(const char* name, const std::optional<double>& v) {
  if (v && !(*v >= 0.0 && *v <= 100.0)) {
    fail(ErrorCode::kValidation, std::string(name) + " = " + format_double(*v) +
                                     " lies outside [0, 100]");
  }
}

bool in_group(Group g, GroupFilter filter) {
  switch (filter) {
    case GroupFilter::kNeutral: return g == Group::kNeutral;
    case GroupFilter::kExplicit: return is_explicit(g);
    case GroupFilter::kExplicitA: return g == Group::kExplicitA;
    case GroupFilter::kExplicitB: return g == Group::kExplicitB;
  }
  return false;
}

}  // namespace

void CaptionFlagSet::validate() const {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (r.group == Group::kUnlabeled) {
      fail(ErrorCode::kValidation, "record " + std::to_string(i) + " has no group");
    }
    if (r.predicted_gender_correct && !is_explicit(r.group)) {
      fail(ErrorCode::kValidation, "record " + std::to_string(i) +
                                       " carries gender correctness outside an explicit group");
    }
  }
}

CaptionFlagSet CaptionFlagSet::parse(std::string_view text) {
  CaptionFlagSet set;
  for (auto& [line, f] : tsv_rows(text, 4)) {
    CaptionFlag r;
    r.source_id = f[0];
    r.group = parse_group(trim(f[1]));
    r.gendered_word_present = parse_flag(f[2], line);
    if (!trim(f[3]).empty()) r.predicted_gender_correct = parse_flag(f[3], line);
    set.records.push_back(std::move(r));
  }
  set.validate();
  return set;
}

CaptionFlagSet CaptionFlagSet::load(const std::filesystem::path& path) {
  return parse(read_text_file(path));
}

std::string CaptionFlagSet::to_string() const {
  std::string out = "source_id\tgroup\tgendered_word_present\tpredicted_gender_correct\n";
  for (const auto& r : records) {
    out += r.source_id + '\t' + std::string(biopro::to_string(r.group)) + '\t' +
           (r.gendered_word_present ? "1" : "0") + '\t';
    if (r.predicted_gender_correct) out += *r.predicted_gender_correct ? "1" : "0";
    out += '\n';
  }
  return out;
}

void GenerationCountSet::validate() const {
  for (const auto& c : categories) {
    if (c.n_a < 0 || c.n_b < 0 || c.total < 0 || c.explicit_mismatches < 0 || c.explicit_total < 0) {
      fail(ErrorCode::kValidation, "category '" + c.category_id + "' has a negative count");
    }
    if (c.n_a + c.n_b > c.total) {
      fail(ErrorCode::kValidation, "category '" + c.category_id + "': n_a + n_b exceeds C");
    }
    if (c.explicit_mismatches > c.explicit_total) {
      fail(ErrorCode::kValidation, "category '" + c.category_id + "': mismatches exceed explicit total");
    }
  }
}

GenerationCountSet GenerationCountSet::filter(const std::vector<std::string>& ids) const {
  GenerationCountSet out;
  for (const auto& c : categories) {
    if (std::find(ids.begin(), ids.end(), c.category_id) != ids.end()) out.categories.push_back(c);
  }
  return out;
}

GenerationCountSet GenerationCountSet::parse(std::string_view text) {
  GenerationCountSet set;
  for (auto& [line, f] : tsv_rows(text, 6)) {
    CategoryCounts c;
    c.category_id = f[0];
    c.n_a = parse_count(f[1], line);
    c.n_b = parse_count(f[2], line);
    c.total = parse_count(f[3], line);
    c.explicit_mismatches = parse_count(f[4], line);
    c.explicit_total = parse_count(f[5], line);
    set.categories.push_back(std::move(c));
  }
  set.validate();
  return set;
}

GenerationCountSet GenerationCountSet::load(const std::filesystem::path& path) {
  return parse(read_text_file(path));
}

std::string GenerationCountSet::to_string() const {
  std::string out = "category_id\tn_a\tn_b\ttotal\texplicit_mismatches\texplicit_total\n";
  for (const auto& c : categories) {
    out += c.category_id + '\t' + std::to_string(c.n_a) + '\t' + std::to_string(c.n_b) + '\t' +
           std::to_string(c.total) + '\t' + std::to_string(c.explicit_mismatches) + '\t' +
           std::to_string(c.explicit_total) + '\n';
  }
  return out;
}

double bias_rate(const CaptionFlagSet& flags, GroupFilter filter) {
  long long total = 0;
  long long flagged = 0;
  for (const auto& r : flags.records) {
    if (!in_group(r.group, filter)) continue;
    ++total;
    if (r.gendered_word_present) ++flagged;
  }
  if (total == 0) fail(ErrorCode::kInsufficientData, "no captions in the requested group");
  return 100.0 * static_cast<double>(flagged) / static_cast<double>(total);
}

double composite_bias_rate(double br_n, double br_e, double br_e_base) {
  for (double v : {br_n, br_e, br_e_base}) {
    if (!(v >= 0.0 && v <= 100.0)) {
      fail(ErrorCode::kRange, "bias rate " + format_double(v) + " lies outside [0, 100]");
    }
  }
  return std::hypot(br_n, br_e - br_e_base);
}

SkewResult skew(const GenerationCountSet& counts, bool as_fraction) {
  counts.validate();
  if (counts.categories.empty()) fail(ErrorCode::kInsufficientData, "no categories to average");
  SkewResult out;
  const double scale = as_fraction ? 1.0 : 100.0;
  double sum = 0.0;
  for (const auto& c : counts.categories) {
    if (c.total <= 0) fail(ErrorCode::kValidation, "category '" + c.category_id + "' has C = 0");
    const double v = scale * static_cast<double>(std::max(c.n_a, c.n_b)) / static_cast<double>(c.total);
    out.per_category.push_back(v);
    sum += v;
  }
  out.mean = sum / static_cast<double>(out.per_category.size());
  return out;
}

double misclassification_rate(const GenerationCountSet& counts) {
  counts.validate();
  long long mismatches = 0;
  long long total = 0;
  for (const auto& c : counts.categories) {
    mismatches += c.explicit_mismatches;
    total += c.explicit_total;
  }
  if (total <= 0) fail(ErrorCode::kInsufficientData, "explicit_total is zero");
  return 100.0 * static_cast<double>(mismatches) / static_cast<double>(total);
}

std::string_view to_string(DistanceKind kind) noexcept {
  return kind == DistanceKind::kCosine ? "cosine" : "frobenius_rel";
}

DistanceKind parse_distance_kind(std::string_view text) {
  if (text == "cosine") return DistanceKind::kCosine;
  if (text == "frobenius_rel") return DistanceKind::kFrobeniusRel;
  fail(ErrorCode::kUsage, "unknown distance kind '" + std::string(text) + "'");
}

double semantic_distance(const Matrix& h, const Matrix& h_tilde, DistanceKind kind) {
  if (h.rows() != h_tilde.rows() || h.cols() != h_tilde.cols()) {
    fail(ErrorCode::kDimension, "semantic distance needs equal shapes");
  }
  if (h.cols() == 0) fail(ErrorCode::kInsufficientData, "semantic distance of empty matrices");
  if (kind == DistanceKind::kFrobeniusRel) {
    const double base = h.norm();
    if (base == 0.0) fail(ErrorCode::kDegenerate, "reference matrix has zero norm");
    return (h - h_tilde).norm() / base;
  }
  double total = 0.0;
  for (Eigen::Index j = 0; j < h.cols(); ++j) {
    const double na = h.col(j).norm();
    const double nb = h_tilde.col(j).norm();
    if (na == 0.0 || nb == 0.0) {
      fail(ErrorCode::kDegenerate, "column " + std::to_string(j) + " has zero norm");
    }
    total += 1.0 - h.col(j).dot(h_tilde.col(j)) / (na * nb);
  }
  return total / static_cast<double>(h.cols());
}

double faithfulness_ratio(double prob_before, double prob_after) {
  if (!(prob_before > 0.0)) fail(ErrorCode::kRange, "prob_before must be positive");
  if (!(prob_after >= 0.0)) fail(ErrorCode::kRange, "prob_after must be non-negative");
  return prob_after / prob_before;
}

void BiasReport::validate() const {
  check_percentage("br_n", br_n);
  check_percentage("br_e", br_e);
  check_percentage("br_e_base", br_e_base);
  check_percentage("cbr", cbr);
  check_percentage("skew_a", skew_a);
  check_percentage("skew_b", skew_b);
  check_percentage("skew", skew);
  check_percentage("mr", mr);
  if (cbr && br_n && br_e && br_e_base) {
    const double expected = composite_bias_rate(*br_n, *br_e, *br_e_base);
    if (std::abs(expected - *cbr) > 1e-9) {
      fail(ErrorCode::kValidation, "cbr " + format_double(*cbr) +
                                       " does not match its BR fields (" +
                                       format_double(expected) + ")");
    }
  }
}

std::string BiasReport::to_keyvalue() const {
  KeyValue kv;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) kv.set(key, *v);
  };
  put("br_n", br_n);
  put("br_e", br_e);
  put("br_e_base", br_e_base);
  put("cbr", cbr);
  put("skew_a", skew_a);
  put("skew_b", skew_b);
  put("skew", skew);
  put("mr", mr);
  put("semantic_distance", semantic_distance);
  for (const auto& b : balances) {
    kv.set("balance." + b.category_id, std::to_string(b.n_a) + "," + std::to_string(b.n_b));
  }
  return kv.to_string();
}

std::string BiasReport::to_summary_line() const {
  std::string out = "{";
  bool first = true;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (!v) return;
    if (!first) out += ",";
    first = false;
    out += "\"";
    out += key;
    out += "\":";
    out += std::isfinite(*v) ? format_double(*v) : "null";
  };
  put("br_n", br_n);
  put("br_e", br_e);
  put("br_e_base", br_e_base);
  put("cbr", cbr);
  put("skew_a", skew_a);
  put("skew_b", skew_b);
  put("skew", skew);
  put("mr", mr);
  put("semantic_distance", semantic_distance);
  out += "}";
  return out;
}

BiasReport BiasReport::from_keyvalue(std::string_view text) {
  const auto kv = KeyValue::parse(text);
  BiasReport r;
  auto get = [&](const char* key) -> std::optional<double> {
    if (auto v = kv.find(key)) return parse_double(*v);
    return std::nullopt;
  };
  r.br_n = get("br_n");
  r.br_e = get("br_e");
  r.br_e_base = get("br_e_base");
  r.cbr = get("cbr");
  r.skew_a = get("skew_a");
  r.skew_b = get("skew_b");
  r.skew = get("skew");
  r.mr = get("mr");
  r.semantic_distance = get("semantic_distance");
  for (const auto& [key, value] : kv.entries()) {
    if (!key.starts_with("balance.")) continue;
    const auto parts = split(value, ',');
    if (parts.size() != 2) fail(ErrorCode::kFormat, "balance entry '" + key + "' needs n_a,n_b");
    r.balances.push_back({key.substr(8), parse_count(parts[0], 0), parse_count(parts[1], 0)});
  }
  r.validate();
  return r;
}

BiasReport captioning_report(const CaptionFlagSet& flags, double br_e_base) {
  flags.validate();
  BiasReport r;
  const bool has_neutral = std::any_of(flags.records.begin(), flags.records.end(),
                                       [](const auto& f) { return f.group == Group::kNeutral; });
  const bool has_explicit = std::any_of(flags.records.begin(), flags.records.end(),
                                        [](const auto& f) { return is_explicit(f.group); });
  if (has_neutral) r.br_n = bias_rate(flags, GroupFilter::kNeutral);
  if (has_explicit) r.br_e = bias_rate(flags, GroupFilter::kExplicit);
  r.br_e_base = br_e_base;
  if (r.br_n && r.br_e) r.cbr = composite_bias_rate(*r.br_n, *r.br_e, br_e_base);
  r.validate();
  return r;
}

BiasReport generation_report(const GenerationCountSet& counts,
                             const std::vector<std::string>& stereotype_a,
                             const std::vector<std::string>& stereotype_b) {
  BiasReport r;
  r.skew = skew(counts).mean;
  if (!stereotype_a.empty()) r.skew_a = skew(counts.filter(stereotype_a)).mean;
  if (!stereotype_b.empty()) r.skew_b = skew(counts.filter(stereotype_b)).mean;
  long long explicit_total = 0;
  for (const auto& c : counts.categories) {
    explicit_total += c.explicit_total;
    r.balances.push_back({c.category_id, c.n_a, c.n_b});
  }
  if (explicit_total > 0) r.mr = misclassification_rate(counts);
  r.validate();
  return r;
}

}  // namespace biopro
