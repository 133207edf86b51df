#pragma once

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "copref/provider.hpp"

namespace copref::testing {

// Independent oracle: floating-point weighted mean, std::round is
// half-away-from-zero.
inline int oracle_mean(const std::vector<std::pair<int, DurationMs>>& xs) {
  double num = 0, den = 0;
  for (const auto& [p, d] : xs) {
    num += static_cast<double>(p) * static_cast<double>(d);
    den += static_cast<double>(d);
  }
  return static_cast<int>(std::round(num / den));
}

inline std::vector<FeaturePartial> random_partials(std::mt19937_64& rng) {
  static const char* kNames[] = {"a", "b", "c", "d", "e"};
  std::vector<FeaturePartial> parts(1 + rng() % 6);
  for (auto& part : parts) {
    part.duration_ms = 1 + static_cast<DurationMs>(rng() % 5000);
    for (const char* n : kNames) {
      if (rng() % 3) {
        part.features.scores.emplace(Keyword::normalize(n),
                                     Presence::from_int(static_cast<int>(rng() % 5) - 2));
      }
    }
  }
  return parts;
}

/// Every combined score equals the oracle mean, with absence counted as -2.
inline bool combine_matches_oracle(const std::vector<FeaturePartial>& parts, const VideoFeatures& got) {
  for (const auto& [kw, p] : got.scores) {
    std::vector<std::pair<int, DurationMs>> xs;
    for (const auto& part : parts) {
      auto it = part.features.scores.find(kw);
      xs.emplace_back(it == part.features.scores.end() ? -2 : it->second.value(), part.duration_ms);
    }
    if (p.value() != oracle_mean(xs)) return false;
  }
  return true;
}

}  // namespace copref::testing
