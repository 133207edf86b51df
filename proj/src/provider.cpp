#include "copref/provider.hpp"

#include <algorithm>
#include <set>

#include "copref/error.hpp"

namespace copref {

namespace {

[[noreturn]] void schema_fail(const std::string& field, const std::string& what) {
  fail(ErrorCode::SchemaError, field + ": " + what);
}

std::string get_string(const json& doc, const char* key, const std::string& where) {
  if (!doc.contains(key) || !doc[key].is_string()) {
    schema_fail(where + "." + key, "expected string");
  }
  return doc[key].get<std::string>();
}

// round(num / den) with ties away from zero, den > 0.
long long rounded_ratio(long long num, long long den) {
  const long long mag = (2 * (num < 0 ? -num : num) + den) / (2 * den);
  return num < 0 ? -mag : mag;
}

}  // namespace

json result_to_json(const CensorshipResult& r) {
  json risks = json::array();
  for (const auto& f : r.risks) {
    risks.push_back({{"category", f.category},
                     {"level", f.level},
                     {"rank", f.rank},
                     {"rationale", f.rationale}});
  }
  json appr = json::array();
  for (const auto& f : r.appropriateness) {
    appr.push_back({{"category", f.category}, {"value", f.value}, {"rationale", f.rationale}});
  }
  return {{"video_id", r.video_id},
          {"age_band", r.age_band},
          {"risks", std::move(risks)},
          {"appropriateness", std::move(appr)},
          {"features", features_to_json(r.features)},
          {"summary", r.summary},
          {"produced_at", r.produced_at},
          {"provider_id", r.provider_id}};
}

CensorshipResult result_from_json(const json& doc) {
  if (!doc.is_object()) schema_fail("result", "expected object");
  CensorshipResult r;
  r.video_id = get_string(doc, "video_id", "result");
  r.age_band = get_string(doc, "age_band", "result");
  r.summary = get_string(doc, "summary", "result");
  r.provider_id = get_string(doc, "provider_id", "result");
  if (!doc.contains("produced_at") || !doc["produced_at"].is_number_integer()) {
    schema_fail("result.produced_at", "expected integer");
  }
  r.produced_at = doc["produced_at"].get<TimestampMs>();
  if (!doc.contains("features")) schema_fail("result.features", "missing");
  r.features = features_from_json(doc["features"]);
  if (!doc.contains("risks") || !doc["risks"].is_array()) {
    schema_fail("result.risks", "expected array");
  }
  for (const auto& f : doc["risks"]) {
    if (!f.is_object()) schema_fail("result.risks", "expected objects");
    RiskFinding rf;
    rf.category = get_string(f, "category", "result.risks");
    rf.level = get_string(f, "level", "result.risks");
    rf.rationale = f.value("rationale", "");
    rf.rank = f.value("rank", 0);
    r.risks.push_back(std::move(rf));
  }
  if (!doc.contains("appropriateness") || !doc["appropriateness"].is_array()) {
    schema_fail("result.appropriateness", "expected array");
  }
  for (const auto& f : doc["appropriateness"]) {
    if (!f.is_object() || !f.contains("value") || !f["value"].is_number_integer()) {
      schema_fail("result.appropriateness", "expected {category, value}");
    }
    r.appropriateness.push_back(
        {get_string(f, "category", "result.appropriateness"), f["value"].get<int>(),
         f.value("rationale", "")});
  }
  return r;
}

void validate_result(CensorshipResult& result, const CommonGuidelineSet& common) {
  if (!common.band_index(result.age_band)) {
    fail(ErrorCode::GuidelineViolation, "unknown age band '" + result.age_band + "'");
  }
  for (auto& f : result.risks) {
    const RiskCategory* cat = common.find_risk(f.category);
    if (!cat) fail(ErrorCode::GuidelineViolation, "unknown risk category '" + f.category + "'");
    const auto rank = cat->rank_of(f.level);
    if (!rank) {
      fail(ErrorCode::GuidelineViolation,
           "level '" + f.level + "' is not defined for risk '" + f.category + "'");
    }
    f.rank = *rank;
  }
  for (const auto& f : result.appropriateness) {
    const AppropriatenessCategory* cat = common.find_appropriateness(f.category);
    if (!cat) {
      fail(ErrorCode::GuidelineViolation,
           "unknown appropriateness category '" + f.category + "'");
    }
    if (!cat->has_value(f.value)) {
      fail(ErrorCode::GuidelineViolation, "value " + std::to_string(f.value) +
                                              " is not on the scale of '" + f.category + "'");
    }
  }
}

void ProviderConfig::validate() const {
  if (kind == ProviderKind::Live && (endpoint.empty() || model_name.empty())) {
    fail(ErrorCode::InvalidArgument, "provider: live provider needs endpoint and model_name");
  }
  if (kind == ProviderKind::Mock && lexicon_path.empty()) {
    fail(ErrorCode::InvalidArgument, "provider: mock provider needs lexicon_path");
  }
  if (context_budget < 256) fail(ErrorCode::InvalidArgument, "provider: context_budget < 256");
  if (request_timeout_ms <= 0) fail(ErrorCode::InvalidArgument, "provider: request_timeout_ms <= 0");
  if (max_in_flight < 1) fail(ErrorCode::InvalidArgument, "provider: max_in_flight < 1");
  if (max_retries < 0) fail(ErrorCode::InvalidArgument, "provider: max_retries < 0");
}

ProviderConfig provider_config_from_json(const json& doc,
                                         const std::filesystem::path& base_dir) {
  if (!doc.is_object()) schema_fail("provider", "expected object");
  ProviderConfig cfg;
  const std::string kind = doc.value("kind", "mock");
  if (kind == "mock") {
    cfg.kind = ProviderKind::Mock;
  } else if (kind == "live") {
    cfg.kind = ProviderKind::Live;
  } else {
    schema_fail("provider.kind", "expected \"mock\" or \"live\"");
  }
  try {
    cfg.endpoint = doc.value("endpoint", "");
    cfg.model_name = doc.value("model_name", "");
    cfg.context_budget = doc.value("context_budget", cfg.context_budget);
    cfg.request_timeout_ms = doc.value("request_timeout_ms", cfg.request_timeout_ms);
    cfg.max_in_flight = doc.value("max_in_flight", cfg.max_in_flight);
    cfg.max_retries = doc.value("max_retries", cfg.max_retries);
    const std::string lexicon = doc.value("lexicon_path", "");
    if (!lexicon.empty()) {
      const std::filesystem::path p(lexicon);
      cfg.lexicon_path = p.is_absolute() || base_dir.empty() ? p : base_dir / p;
    }
  } catch (const json::type_error& e) {
    schema_fail("provider", e.what());
  }
  cfg.validate();
  return cfg;
}

std::unique_ptr<AnalysisProvider> make_provider(const ProviderConfig& cfg) {
  cfg.validate();
  if (cfg.kind == ProviderKind::Mock) {
    return std::make_unique<MockProvider>(load_lexicon(cfg.lexicon_path));
  }
  return std::make_unique<LiveProvider>(cfg);
}

VideoFeatures combine_chunks(std::span<const FeaturePartial> partials) {
  if (partials.empty()) fail(ErrorCode::NoChunks, "nothing to combine");
  long long total = 0;
  std::set<Keyword> keywords;
  for (const auto& p : partials) {
    if (p.duration_ms <= 0) fail(ErrorCode::InvalidArgument, "chunk duration must be positive");
    total += p.duration_ms;
    for (const auto& [kw, _] : p.features.scores) keywords.insert(kw);
  }
  VideoFeatures out;
  out.coverage_ms = total;
  for (const auto& kw : keywords) {
    long long weighted = 0;
    for (const auto& p : partials) {
      weighted += static_cast<long long>(p.features.presence_of(kw).value()) * p.duration_ms;
    }
    out.scores.emplace(kw, Presence::clamped(static_cast<int>(rounded_ratio(weighted, total))));
  }
  return out;
}

std::vector<RiskFinding> combine_risks(std::span<const std::vector<RiskFinding>> partials) {
  std::vector<RiskFinding> out;
  for (const auto& findings : partials) {
    for (const auto& f : findings) {
      auto it = std::find_if(out.begin(), out.end(),
                             [&](const RiskFinding& o) { return o.category == f.category; });
      if (it == out.end()) {
        out.push_back(f);
      } else if (f.rank > it->rank ||
                 (f.rank == it->rank && f.rationale < it->rationale)) {
        *it = f;
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const RiskFinding& a, const RiskFinding& b) {
    return a.category < b.category;
  });
  return out;
}

}  // namespace copref
