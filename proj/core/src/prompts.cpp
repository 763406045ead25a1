#include "biopro/prompts.hpp"

#include "biopro/error.hpp"
#include "biopro/keyvalue.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace biopro {
namespace detail {
extern const std::string_view kShippedCatalog;
}  // namespace detail

namespace {

bool starts_with_vowel(std::string_view s) {
  if (s.empty()) return false;
  const auto c = static_cast<char>(std::tolower(static_cast<unsigned char>(s.front())));
  return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// Slot names in order of appearance.
std::vector<std::string> slots_of(std::string_view tmpl) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while ((pos = tmpl.find('[', pos)) != std::string_view::npos) {
    const auto close = tmpl.find(']', pos);
    if (close == std::string_view::npos) break;
    out.emplace_back(tmpl.substr(pos + 1, close - pos - 1));
    pos = close + 1;
  }
  return out;
}

std::vector<std::string>* section_for(TemplateCatalog& c, std::string_view name) {
  if (name == "profession_templates") return &c.profession_templates;
  if (name == "scene_templates") return &c.scene_templates;
  if (name == "groups_gender") return &c.groups_gender;
  if (name == "groups_scene") return &c.groups_scene;
  if (name == "training_professions") return &c.training_professions;
  if (name == "testing_professions") return &c.testing_professions;
  if (name == "training_objects") return &c.training_objects;
  if (name == "testing_objects") return &c.testing_objects;
  return nullptr;
}

void append_section(std::string& out, const char* name, const std::vector<std::string>& items) {
  out += "[";
  out += name;
  out += "]\n";
  for (const auto& item : items) out += item + "\n";
  out += "\n";
}

void check_slots(std::vector<CatalogViolation>& out, const std::vector<std::string>& templates,
                 const char* section, const std::string& category_slot) {
  for (std::size_t i = 0; i < templates.size(); ++i) {
    const auto slots = slots_of(templates[i]);
    const auto where = std::string(section) + " #" + std::to_string(i + 1);
    for (const std::string& required : {std::string("group"), category_slot}) {
      const auto n = std::count(slots.begin(), slots.end(), required);
      if (n != 1) {
        out.push_back({CatalogViolation::Kind::kSlot, where + ": [" + required + "] appears " +
                                                          std::to_string(n) + " times"});
      }
    }
    for (const auto& s : slots) {
      if (s != "group" && s != category_slot) {
        out.push_back({CatalogViolation::Kind::kSlot, where + ": unknown slot [" + s + "]"});
      }
    }
  }
}

void check_duplicates(std::vector<CatalogViolation>& out, const std::vector<std::string>& items,
                      const char* section) {
  std::set<std::string> seen;
  for (const auto& item : items) {
    if (!seen.insert(item).second) {
      out.push_back({CatalogViolation::Kind::kDuplicate,
                     std::string(section) + ": '" + item + "' listed more than once"});
    }
  }
}

void check_disjoint(std::vector<CatalogViolation>& out, const std::vector<std::string>& train,
                    const std::vector<std::string>& test, const char* what) {
  for (const auto& item : test) {
    if (std::find(train.begin(), train.end(), item) != train.end()) {
      out.push_back({CatalogViolation::Kind::kDisjointness,
                     std::string(what) + " '" + item + "' is in both training and testing lists"});
    }
  }
}

}  // namespace

TemplateCatalog TemplateCatalog::parse(std::string_view text) {
  TemplateCatalog c;
  std::string section;
  std::vector<std::string>* target = nullptr;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[' && line.back() == ']' && line.find(' ') == std::string_view::npos) {
      section = std::string(line.substr(1, line.size() - 2));
      target = section_for(c, section);
      if (!target && section != "baseline_prompts") {
        fail(ErrorCode::kFormat, "line " + std::to_string(line_no) + ": unknown section [" + section + "]");
      }
      continue;
    }
    if (section.empty()) {
      fail(ErrorCode::kFormat, "line " + std::to_string(line_no) + ": entry outside any section");
    }
    if (section == "baseline_prompts") {
      const auto tab = line.find('\t');
      if (tab == std::string_view::npos) {
        fail(ErrorCode::kFormat, "line " + std::to_string(line_no) + ": expected name<TAB>text");
      }
      c.baseline_prompts.emplace_back(std::string(trim(line.substr(0, tab))),
                                      std::string(trim(line.substr(tab + 1))));
      continue;
    }
    target->emplace_back(line);
  }
  return c;
}

TemplateCatalog TemplateCatalog::load(const std::filesystem::path& path) {
  return parse(read_text_file(path));
}

std::string TemplateCatalog::to_string() const {
  std::string out;
  append_section(out, "profession_templates", profession_templates);
  append_section(out, "scene_templates", scene_templates);
  append_section(out, "groups_gender", groups_gender);
  append_section(out, "groups_scene", groups_scene);
  append_section(out, "training_professions", training_professions);
  append_section(out, "testing_professions", testing_professions);
  append_section(out, "training_objects", training_objects);
  append_section(out, "testing_objects", testing_objects);
  out += "[baseline_prompts]\n";
  for (const auto& [name, text] : baseline_prompts) out += name + "\t" + text + "\n";
  return out;
}

std::string_view TemplateCatalog::shipped_text() { return detail::kShippedCatalog; }

const TemplateCatalog& TemplateCatalog::shipped() {
  static const TemplateCatalog catalog = parse(detail::kShippedCatalog);
  return catalog;
}

PromptMode parse_prompt_mode(std::string_view text) {
  if (text == "gender") return PromptMode::kGender;
  if (text == "scene") return PromptMode::kScene;
  fail(ErrorCode::kUsage, "unknown prompt mode '" + std::string(text) + "'");
}

PromptSplit parse_prompt_split(std::string_view text) {
  if (text == "train") return PromptSplit::kTrain;
  if (text == "test") return PromptSplit::kTest;
  fail(ErrorCode::kUsage, "unknown split '" + std::string(text) + "'");
}

std::string fill_template(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find('[', pos);
    if (open == std::string_view::npos) {
      out.append(tmpl.substr(pos));
      break;
    }
    const auto close = tmpl.find(']', open);
    if (close == std::string_view::npos) {
      fail(ErrorCode::kValidation, "unterminated slot in template '" + std::string(tmpl) + "'");
    }
    out.append(tmpl.substr(pos, open - pos));
    const std::string name(tmpl.substr(open + 1, close - open - 1));
    const auto it = values.find(name);
    if (it == values.end()) {
      fail(ErrorCode::kValidation, "unknown slot [" + name + "] in template '" + std::string(tmpl) + "'");
    }
    const bool article = out.ends_with(" a ") || out == "a ";
    if (article && starts_with_vowel(it->second)) out.insert(out.size() - 1, "n");
    out += it->second;
    pos = close + 1;
  }
  return out;
}

std::vector<PromptTuple> expand(const TemplateCatalog& catalog, PromptMode mode, PromptSplit split) {
  const bool gender = mode == PromptMode::kGender;
  const auto& templates = gender ? catalog.profession_templates : catalog.scene_templates;
  const auto& groups = gender ? catalog.groups_gender : catalog.groups_scene;
  const auto& categories = gender
      ? (split == PromptSplit::kTrain ? catalog.training_professions : catalog.testing_professions)
      : (split == PromptSplit::kTrain ? catalog.training_objects : catalog.testing_objects);
  const std::string slot = gender ? "profession" : "object";
  const std::size_t needed = gender ? 3 : 2;
  if (groups.size() != needed) {
    fail(ErrorCode::kValidation, std::string(gender ? "groups_gender" : "groups_scene") +
                                     " must list exactly " + std::to_string(needed) + " groups");
  }

  std::vector<PromptTuple> out;
  out.reserve(templates.size() * categories.size());
  for (const auto& tmpl : templates) {
    for (const auto& category : categories) {
      auto fill = [&](const std::string& group) {
        return fill_template(tmpl, {{"group", group}, {slot, category}});
      };
      PromptTuple t;
      t.prompt_a = fill(groups[0]);
      t.prompt_b = fill(groups[1]);
      if (gender) t.neutral = fill(groups[2]);
      t.category = category;
      out.push_back(std::move(t));
    }
  }
  return out;
}

std::string expansion_to_tsv(const std::vector<PromptTuple>& tuples) {
  std::string out = "prompt_a\tprompt_b\tneutral\tcategory\n";
  for (const auto& t : tuples) {
    out += t.prompt_a + '\t' + t.prompt_b + '\t' + t.neutral.value_or("") + '\t' + t.category + '\n';
  }
  return out;
}

std::string_view to_string(CatalogViolation::Kind kind) noexcept {
  switch (kind) {
    case CatalogViolation::Kind::kDisjointness: return "disjointness";
    case CatalogViolation::Kind::kSlot: return "slot";
    case CatalogViolation::Kind::kDuplicate: return "duplicate";
    case CatalogViolation::Kind::kGroups: return "groups";
  }
  return "slot";
}

std::vector<CatalogViolation> validate_catalog(const TemplateCatalog& catalog) {
  std::vector<CatalogViolation> out;
  check_disjoint(out, catalog.training_professions, catalog.testing_professions, "profession");
  check_disjoint(out, catalog.training_objects, catalog.testing_objects, "object");
  check_slots(out, catalog.profession_templates, "profession_templates", "profession");
  check_slots(out, catalog.scene_templates, "scene_templates", "object");
  check_duplicates(out, catalog.training_professions, "training_professions");
  check_duplicates(out, catalog.testing_professions, "testing_professions");
  check_duplicates(out, catalog.training_objects, "training_objects");
  check_duplicates(out, catalog.testing_objects, "testing_objects");
  if (catalog.groups_gender.size() != 3) {
    out.push_back({CatalogViolation::Kind::kGroups, "groups_gender must list 3 groups"});
  }
  if (catalog.groups_scene.size() != 2) {
    out.push_back({CatalogViolation::Kind::kGroups, "groups_scene must list 2 groups"});
  }
  return out;
}

}  // namespace biopro
