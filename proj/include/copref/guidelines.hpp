#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "copref/json.hpp"
#include "copref/preference.hpp"

namespace copref {

struct AgeBand {
  std::string name;
  int min_age = 0;
  std::optional<int> max_age;  // inclusive; nullopt = open-ended

  friend bool operator==(const AgeBand&, const AgeBand&) = default;
};

struct RiskCategory {
  std::string name;
  std::vector<std::string> levels;  // ascending severity; levels[0] means no risk
  std::string description;

  /// Position of `level` in `levels`, or nullopt when unknown.
  std::optional<int> rank_of(std::string_view level) const;

  friend bool operator==(const RiskCategory&, const RiskCategory&) = default;
};

struct AppropriatenessCategory {
  std::string name;
  std::map<std::string, int> scale;  // label -> value in 0..3
  std::string description;

  bool has_value(int value) const;

  friend bool operator==(const AppropriatenessCategory&,
                         const AppropriatenessCategory&) = default;
};

const std::vector<std::string>& default_risk_levels();
const std::map<std::string, int>& default_appropriateness_scale();

struct CommonGuidelineSet {
  std::vector<AgeBand> age_bands;
  std::vector<RiskCategory> risks;
  std::vector<AppropriatenessCategory> appropriateness;
  std::string source_notes;

  const RiskCategory* find_risk(std::string_view name) const;
  const AppropriatenessCategory* find_appropriateness(std::string_view name) const;
  std::optional<std::size_t> band_index(std::string_view name) const;

  friend bool operator==(const CommonGuidelineSet&, const CommonGuidelineSet&) = default;
};

/// Parses and validates a guideline document. Throws SchemaError naming the
/// offending field, or OverlapError when two age bands share an age.
CommonGuidelineSet load_common(std::string_view document);
CommonGuidelineSet load_common_json(const json& document);
json serialize_common(const CommonGuidelineSet& set);

enum class Directive { Seek, Avoid, Note };

std::string_view to_string(Directive d);

struct Emphasis {
  Keyword keyword;
  Weight weight;
  Directive directive;

  friend bool operator==(const Emphasis&, const Emphasis&) = default;
};

struct PersonalizedGuideline {
  PreferencePanel co_pref;
  std::vector<Emphasis> emphasis;  // keyword order
};

/// avoid for negative weights, seek for positive, note for zero.
PersonalizedGuideline derive_personalized(const PreferencePanel& co_pref);

/// Deterministic prompt block: age bands, risk categories with their levels,
/// appropriateness scales, then the personalized seek/avoid/note lists.
std::string render_prompt_context(const CommonGuidelineSet& common,
                                  const PersonalizedGuideline& personal);

}  // namespace copref
