#include "copref/guidelines.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "copref/error.hpp"

namespace copref {

namespace {

[[noreturn]] void schema_fail(const std::string& field, const std::string& what) {
  fail(ErrorCode::SchemaError, field + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) schema_fail(where + "." + key, "missing");
  return obj[key];
}

std::string require_name(const json& obj, const std::string& where) {
  const json& v = require(obj, "name", where);
  if (!v.is_string() || v.get<std::string>().empty()) {
    schema_fail(where + ".name", "expected non-empty string");
  }
  return v.get<std::string>();
}

std::string optional_string(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) return {};
  if (!obj[key].is_string()) schema_fail(where + "." + key, "expected string");
  return obj[key].get<std::string>();
}

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> known,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(known.begin(), known.end(),
                     [&](const char* k) { return key == k; })) {
      schema_fail(where + "." + key, "unknown field");
    }
  }
}

const json& require_nonempty_array(const json& doc, const char* key) {
  const json& v = require(doc, key, "guidelines");
  if (!v.is_array() || v.empty()) schema_fail(key, "expected non-empty array");
  return v;
}

std::vector<AgeBand> parse_bands(const json& arr) {
  std::vector<AgeBand> bands;
  std::set<std::string> names;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "age_bands[" + std::to_string(i) + "]";
    const json& b = arr[i];
    if (!b.is_object()) schema_fail(where, "expected object");
    reject_unknown_keys(b, {"name", "min_age", "max_age"}, where);
    AgeBand band;
    band.name = require_name(b, where);
    if (!names.insert(band.name).second) schema_fail(where + ".name", "duplicate band name");
    const json& min = require(b, "min_age", where);
    if (!min.is_number_integer() || min.get<int>() < 0) {
      schema_fail(where + ".min_age", "expected non-negative integer");
    }
    band.min_age = min.get<int>();
    if (b.contains("max_age") && !b["max_age"].is_null()) {
      if (!b["max_age"].is_number_integer() || b["max_age"].get<int>() < band.min_age) {
        schema_fail(where + ".max_age", "expected integer >= min_age or null");
      }
      band.max_age = b["max_age"].get<int>();
    }
    bands.push_back(std::move(band));
  }

  auto overlaps = [](const AgeBand& a, const AgeBand& b) {
    const bool a_before_b = a.max_age && *a.max_age < b.min_age;
    const bool b_before_a = b.max_age && *b.max_age < a.min_age;
    return !a_before_b && !b_before_a;
  };
  for (std::size_t i = 0; i < bands.size(); ++i) {
    for (std::size_t j = i + 1; j < bands.size(); ++j) {
      if (overlaps(bands[i], bands[j])) {
        fail(ErrorCode::OverlapError,
             "age_bands: '" + bands[i].name + "' overlaps '" + bands[j].name + "'");
      }
    }
  }
  if (bands.front().min_age != 0) schema_fail("age_bands[0].min_age", "must be 0");
  for (std::size_t i = 1; i < bands.size(); ++i) {
    const auto& prev = bands[i - 1];
    if (!prev.max_age || *prev.max_age + 1 != bands[i].min_age) {
      schema_fail("age_bands[" + std::to_string(i) + "].min_age",
                  "bands must be ascending and contiguous");
    }
  }
  if (bands.back().max_age) {
    schema_fail("age_bands[" + std::to_string(bands.size() - 1) + "].max_age",
                "last band must be open-ended (null)");
  }
  return bands;
}

std::vector<RiskCategory> parse_risks(const json& arr) {
  std::vector<RiskCategory> risks;
  std::set<std::string> names;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "risks[" + std::to_string(i) + "]";
    const json& r = arr[i];
    if (!r.is_object()) schema_fail(where, "expected object");
    reject_unknown_keys(r, {"name", "levels", "description"}, where);
    RiskCategory cat;
    cat.name = require_name(r, where);
    if (!names.insert(cat.name).second) schema_fail(where + ".name", "duplicate category");
    cat.description = optional_string(r, "description", where);
    if (!r.contains("levels")) {
      cat.levels = default_risk_levels();
    } else {
      const json& levels = r["levels"];
      if (!levels.is_array() || levels.empty()) {
        schema_fail(where + ".levels", "expected non-empty array");
      }
      std::set<std::string> seen;
      for (const auto& l : levels) {
        if (!l.is_string() || l.get<std::string>().empty()) {
          schema_fail(where + ".levels", "expected non-empty strings");
        }
        if (!seen.insert(l.get<std::string>()).second) {
          schema_fail(where + ".levels", "duplicate level '" + l.get<std::string>() + "'");
        }
        cat.levels.push_back(l.get<std::string>());
      }
    }
    risks.push_back(std::move(cat));
  }
  return risks;
}

std::vector<AppropriatenessCategory> parse_appropriateness(const json& arr) {
  std::vector<AppropriatenessCategory> out;
  std::set<std::string> names;
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string where = "appropriateness[" + std::to_string(i) + "]";
    const json& a = arr[i];
    if (!a.is_object()) schema_fail(where, "expected object");
    reject_unknown_keys(a, {"name", "scale", "description"}, where);
    AppropriatenessCategory cat;
    cat.name = require_name(a, where);
    if (!names.insert(cat.name).second) schema_fail(where + ".name", "duplicate category");
    cat.description = optional_string(a, "description", where);
    if (!a.contains("scale")) {
      cat.scale = default_appropriateness_scale();
    } else {
      const json& scale = a["scale"];
      if (!scale.is_object() || scale.empty()) {
        schema_fail(where + ".scale", "expected non-empty object");
      }
      for (const auto& [label, value] : scale.items()) {
        if (label.empty() || !value.is_number_integer() || value.get<int>() < 0 ||
            value.get<int>() > 3) {
          schema_fail(where + ".scale." + label, "expected integer in 0..3");
        }
        cat.scale.emplace(label, value.get<int>());
      }
    }
    out.push_back(std::move(cat));
  }
  return out;
}

}  // namespace

std::optional<int> RiskCategory::rank_of(std::string_view level) const {
  const auto it = std::find(levels.begin(), levels.end(), level);
  if (it == levels.end()) return std::nullopt;
  return static_cast<int>(it - levels.begin());
}

bool AppropriatenessCategory::has_value(int value) const {
  return std::any_of(scale.begin(), scale.end(),
                     [&](const auto& kv) { return kv.second == value; });
}

const std::vector<std::string>& default_risk_levels() {
  static const std::vector<std::string> levels{"none", "low", "medium", "high"};
  return levels;
}

const std::map<std::string, int>& default_appropriateness_scale() {
  static const std::map<std::string, int> scale{
      {"none", 0}, {"low", 1}, {"medium", 2}, {"high", 3}};
  return scale;
}

const RiskCategory* CommonGuidelineSet::find_risk(std::string_view name) const {
  for (const auto& r : risks) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const AppropriatenessCategory* CommonGuidelineSet::find_appropriateness(
    std::string_view name) const {
  for (const auto& a : appropriateness) {
    if (a.name == name) return &a;
  }
  return nullptr;
}

std::optional<std::size_t> CommonGuidelineSet::band_index(std::string_view name) const {
  for (std::size_t i = 0; i < age_bands.size(); ++i) {
    if (age_bands[i].name == name) return i;
  }
  return std::nullopt;
}

CommonGuidelineSet load_common(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::SchemaError, std::string("guidelines: ") + e.what());
  }
  return load_common_json(doc);
}

CommonGuidelineSet load_common_json(const json& doc) {
  if (!doc.is_object()) schema_fail("guidelines", "expected object");
  reject_unknown_keys(doc, {"age_bands", "risks", "appropriateness", "source_notes"},
                      "guidelines");
  CommonGuidelineSet set;
  set.age_bands = parse_bands(require_nonempty_array(doc, "age_bands"));
  set.risks = parse_risks(require_nonempty_array(doc, "risks"));
  set.appropriateness = parse_appropriateness(require_nonempty_array(doc, "appropriateness"));
  if (doc.contains("source_notes")) {
    if (!doc["source_notes"].is_string()) schema_fail("source_notes", "expected string");
    set.source_notes = doc["source_notes"].get<std::string>();
  }
  return set;
}

json serialize_common(const CommonGuidelineSet& set) {
  json bands = json::array();
  for (const auto& b : set.age_bands) {
    bands.push_back({{"name", b.name},
                     {"min_age", b.min_age},
                     {"max_age", b.max_age ? json(*b.max_age) : json(nullptr)}});
  }
  json risks = json::array();
  for (const auto& r : set.risks) {
    risks.push_back({{"name", r.name}, {"levels", r.levels}, {"description", r.description}});
  }
  json appr = json::array();
  for (const auto& a : set.appropriateness) {
    appr.push_back({{"name", a.name}, {"scale", a.scale}, {"description", a.description}});
  }
  return {{"age_bands", std::move(bands)},
          {"risks", std::move(risks)},
          {"appropriateness", std::move(appr)},
          {"source_notes", set.source_notes}};
}

std::string_view to_string(Directive d) {
  switch (d) {
    case Directive::Seek: return "seek";
    case Directive::Avoid: return "avoid";
    case Directive::Note: return "note";
  }
  return "note";
}

PersonalizedGuideline derive_personalized(const PreferencePanel& co_pref) {
  if (co_pref.role() != Role::Co) {
    fail(ErrorCode::WrongRole, "personalized guidelines need the co-preference panel, got role '" +
                                   std::string(to_string(co_pref.role())) + "'");
  }
  PersonalizedGuideline out{co_pref, {}};
  for (const auto& [kw, w] : co_pref.entries()) {
    const Directive d = w.value() < 0   ? Directive::Avoid
                        : w.value() > 0 ? Directive::Seek
                                        : Directive::Note;
    out.emphasis.push_back({kw, w, d});
  }
  return out;
}

std::string render_prompt_context(const CommonGuidelineSet& common,
                                  const PersonalizedGuideline& personal) {
  std::ostringstream out;
  out << "## Common guidelines\n";
  out << "### Age bands\n";
  for (const auto& b : common.age_bands) {
    out << "- " << b.name << ": ages " << b.min_age << '-';
    if (b.max_age) {
      out << *b.max_age;
    } else {
      out << "and up";
    }
    out << '\n';
  }
  out << "### Risk categories\n";
  for (const auto& r : common.risks) {
    out << "- " << r.name << " (levels: ";
    for (std::size_t i = 0; i < r.levels.size(); ++i) {
      out << (i ? " < " : "") << r.levels[i];
    }
    out << ')';
    if (!r.description.empty()) out << ": " << r.description;
    out << '\n';
  }
  out << "### Appropriateness categories\n";
  for (const auto& a : common.appropriateness) {
    std::vector<std::pair<int, std::string>> by_value;
    for (const auto& [label, v] : a.scale) by_value.emplace_back(v, label);
    std::sort(by_value.begin(), by_value.end());
    out << "- " << a.name << " (scale: ";
    for (std::size_t i = 0; i < by_value.size(); ++i) {
      out << (i ? ", " : "") << by_value[i].second << '=' << by_value[i].first;
    }
    out << ')';
    if (!a.description.empty()) out << ": " << a.description;
    out << '\n';
  }

  out << "## Personalized guidelines\n";
  if (personal.emphasis.empty()) {
    out << "none configured\n";
    return out.str();
  }
  const std::pair<Directive, const char*> sections[] = {
      {Directive::Seek, "### Seek"}, {Directive::Avoid, "### Avoid"}, {Directive::Note, "### Note"}};
  for (const auto& [directive, header] : sections) {
    out << header << '\n';
    bool any = false;
    for (const auto& e : personal.emphasis) {
      if (e.directive != directive) continue;
      out << "- " << e.keyword.str() << " (weight " << e.weight.value() << ", "
          << e.weight.label() << ")\n";
      any = true;
    }
    if (!any) out << "- (none)\n";
  }
  return out.str();
}

}  // namespace copref
