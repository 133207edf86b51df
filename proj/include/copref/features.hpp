#pragma once

#include <map>

#include "copref/json.hpp"
#include "copref/keyword.hpp"
#include "copref/scale.hpp"
#include "copref/time.hpp"

namespace copref {

/// Per-keyword presence scores extracted from a video (or part of one).
struct VideoFeatures {
  std::map<Keyword, Presence> scores;
  DurationMs coverage_ms = 0;

  /// Missing keywords read as "very low" (-2).
  Presence presence_of(const Keyword& kw) const;

  friend bool operator==(const VideoFeatures&, const VideoFeatures&) = default;
};

json features_to_json(const VideoFeatures& features);
VideoFeatures features_from_json(const json& doc);

}  // namespace copref
