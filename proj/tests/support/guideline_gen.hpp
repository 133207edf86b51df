#pragma once

#include <random>
#include <string>

#include "copref/guidelines.hpp"

namespace copref::testing {

inline std::string random_word(std::mt19937_64& rng, std::size_t min_len = 1) {
  static const std::string letters = "abcdefghijklmnopqrstuvwxyz";
  const std::size_t len = min_len + rng() % 8;
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += letters[rng() % letters.size()];
  return s;
}

/// A random guideline set satisfying every load_common invariant.
inline CommonGuidelineSet random_guideline_set(std::mt19937_64& rng) {
  CommonGuidelineSet set;
  const int nbands = 1 + static_cast<int>(rng() % 5);
  int age = 0;
  for (int i = 0; i < nbands; ++i) {
    AgeBand b{"band" + std::to_string(i) + "_" + random_word(rng), age, std::nullopt};
    if (i + 1 < nbands) {
      b.max_age = age + static_cast<int>(rng() % 6);
      age = *b.max_age + 1;
    }
    set.age_bands.push_back(b);
  }
  const int nrisks = 1 + static_cast<int>(rng() % 5);
  for (int i = 0; i < nrisks; ++i) {
    RiskCategory r;
    r.name = "risk" + std::to_string(i) + " " + random_word(rng);
    if (rng() % 3 == 0) {
      r.levels = default_risk_levels();
    } else {
      const int nlevels = 1 + static_cast<int>(rng() % 5);
      for (int l = 0; l < nlevels; ++l) r.levels.push_back("l" + std::to_string(l) + random_word(rng));
    }
    r.description = rng() % 2 ? random_word(rng) + " \"quoted\" é" : "";
    set.risks.push_back(r);
  }
  const int nappr = 1 + static_cast<int>(rng() % 3);
  for (int i = 0; i < nappr; ++i) {
    AppropriatenessCategory a;
    a.name = "appr" + std::to_string(i);
    const int nlabels = 1 + static_cast<int>(rng() % 4);
    for (int l = 0; l < nlabels; ++l) a.scale[random_word(rng)] = static_cast<int>(rng() % 4);
    a.description = random_word(rng);
    set.appropriateness.push_back(a);
  }
  set.source_notes = rng() % 2 ? random_word(rng) : "";
  return set;
}

/// A copy of a valid set where one band starts inside its predecessor.
/// A single-band set gets a second band nested inside the first.
inline CommonGuidelineSet with_overlapping_bands(std::mt19937_64& rng, CommonGuidelineSet set) {
  if (set.age_bands.size() < 2) {
    const AgeBand& only = set.age_bands.front();
    const int lo = only.min_age + static_cast<int>(rng() % 5);
    set.age_bands.push_back({"nested_" + random_word(rng), lo, lo + static_cast<int>(rng() % 4)});
    return set;
  }
  const std::size_t i = rng() % (set.age_bands.size() - 1);
  const AgeBand& prev = set.age_bands[i];
  const int span = *prev.max_age - prev.min_age + 1;
  set.age_bands[i + 1].min_age = prev.min_age + static_cast<int>(rng() % static_cast<unsigned>(span));
  return set;
}

}  // namespace copref::testing
