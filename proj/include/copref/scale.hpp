#pragma once

#include <cmath>
#include <compare>
#include <string>
#include <string_view>

#include "copref/error.hpp"

namespace copref {

/// Rounds to nearest integer, ties away from zero (-0.5 -> -1, 0.5 -> 1).
inline int round_half_away(double value) {
  return static_cast<int>(std::round(value));
}

inline constexpr int clamp_level(int value) {
  return value < -2 ? -2 : (value > 2 ? 2 : value);
}

/// An integer on the five-point scale {-2, -1, 0, 1, 2}. Values outside the
/// scale cannot be constructed. `Tag` separates preference weights from
/// content presence scores so the two cannot be mixed up.
template <class Tag>
class FivePoint {
 public:
  constexpr FivePoint() = default;

  static FivePoint from_int(int value) {
    if (value < -2 || value > 2) {
      fail(ErrorCode::InvalidArgument,
           std::string(Tag::kName) + " out of range [-2, 2]: " +
               std::to_string(value));
    }
    return FivePoint(value);
  }

  static constexpr FivePoint clamped(int value) {
    return FivePoint(clamp_level(value));
  }

  constexpr int value() const { return value_; }
  std::string_view label() const { return Tag::kLabels[value_ + 2]; }

  friend constexpr auto operator<=>(FivePoint, FivePoint) = default;

 private:
  constexpr explicit FivePoint(int value) : value_(value) {}
  int value_ = 0;
};

struct WeightTag {
  static constexpr const char* kName = "weight";
  static constexpr std::string_view kLabels[5] = {
      "strongly dislike", "dislike", "neutral", "like", "strongly like"};
};

struct PresenceTag {
  static constexpr const char* kName = "presence";
  static constexpr std::string_view kLabels[5] = {"very low", "low", "medium",
                                                  "high", "very high"};
};

/// Preference weight: strongly dislike .. strongly like.
using Weight = FivePoint<WeightTag>;
/// Amount of a keyword's content in a video: very low .. very high.
using Presence = FivePoint<PresenceTag>;

}  // namespace copref
