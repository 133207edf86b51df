#include "copref/features.hpp"

#include "copref/error.hpp"

namespace copref {

Presence VideoFeatures::presence_of(const Keyword& kw) const {
  if (auto it = scores.find(kw); it != scores.end()) return it->second;
  return Presence::clamped(-2);
}

json features_to_json(const VideoFeatures& features) {
  json scores = json::object();
  for (const auto& [kw, p] : features.scores) scores[kw.str()] = p.value();
  return json{{"scores", std::move(scores)},
              {"coverage_ms", features.coverage_ms}};
}

VideoFeatures features_from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorCode::SchemaError, "features: expected object");
  VideoFeatures out;
  if (doc.contains("scores")) {
    if (!doc["scores"].is_object()) {
      fail(ErrorCode::SchemaError, "features.scores: expected object");
    }
    for (const auto& [raw, value] : doc["scores"].items()) {
      if (!value.is_number_integer()) {
        fail(ErrorCode::SchemaError, "features.scores." + raw + ": expected integer");
      }
      out.scores.insert_or_assign(Keyword::normalize(raw),
                                  Presence::from_int(value.get<int>()));
    }
  }
  if (doc.contains("coverage_ms")) {
    if (!doc["coverage_ms"].is_number_integer()) {
      fail(ErrorCode::SchemaError, "features.coverage_ms: expected integer");
    }
    out.coverage_ms = doc["coverage_ms"].get<DurationMs>();
  }
  return out;
}

}  // namespace copref
