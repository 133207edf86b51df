#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "copref/json.hpp"
#include "copref/preference.hpp"
#include "copref/provider.hpp"

namespace copref {

enum class Alignment { Aligned, Misaligned, Informational };

std::string_view to_string(Alignment a);
Alignment parse_alignment(std::string_view text);

/// Aligned when the signs agree (or both are 0), Misaligned when they
/// disagree, Informational when exactly one side is 0.
Alignment classify(Weight pref, Presence score);

enum class LabelScale { Preference, Presence };

/// Label of a value in [-2, 2] on either five-point scale.
std::string_view label_of(int value, LabelScale scale);

struct AlignmentEntry {
  Keyword keyword;
  Weight pref_weight;
  Presence video_score;
  Alignment classification = Alignment::Informational;

  friend bool operator==(const AlignmentEntry&, const AlignmentEntry&) = default;
};

/// The guideline-wide part of a censorship result, copied verbatim.
struct CommonFindings {
  std::string age_band;
  std::vector<RiskFinding> risks;
  std::vector<AppropriatenessFinding> appropriateness;
  std::string summary;

  friend bool operator==(const CommonFindings&, const CommonFindings&) = default;
};

struct InTimeFeedback {
  std::string video_id;
  std::vector<AlignmentEntry> entries;  // keyword order
  CommonFindings common;
  TimestampMs produced_at = 0;

  friend bool operator==(const InTimeFeedback&, const InTimeFeedback&) = default;
};

/// One entry per co-preference keyword. Keywords the result does not score
/// count as -2.
InTimeFeedback build_in_time(const PreferencePanel& co_pref, const CensorshipResult& result);

json feedback_to_json(const InTimeFeedback& feedback);
InTimeFeedback feedback_from_json(const json& doc);

struct Period {
  TimestampMs from = 0;
  TimestampMs to = 0;
  DurationMs bucket = kMillisPerDay;

  void validate() const;
  /// ceil((to - from) / bucket)
  std::size_t bucket_count() const;

  friend bool operator==(const Period&, const Period&) = default;
};

struct KeywordSummary {
  double mean_score = 0;
  Weight pref_weight;
  std::string display_label;  // presence label of the rounded mean
  Alignment classification = Alignment::Informational;  // on the rounded mean

  friend bool operator==(const KeywordSummary&, const KeywordSummary&) = default;
};

struct SummaryReport {
  Period period;
  std::map<Keyword, KeywordSummary> per_keyword;
  /// Videos with the category above its lowest level.
  std::map<std::string, int> risk_frequency;
  /// The same counts split into period buckets starting at period.from.
  std::map<std::string, std::vector<int>> risk_trend;
  int video_count = 0;

  friend bool operator==(const SummaryReport&, const SummaryReport&) = default;
};

/// Aggregates the records with produced_at in [from, to). The preference
/// weight reported for a keyword is the one from the latest record that
/// carries it.
SummaryReport aggregate(std::span<const InTimeFeedback> records, const Period& period);

json report_to_json(const SummaryReport& report);

/// category,bucket_start,count rows, one per category and bucket.
std::string trend_csv(const SummaryReport& report);

}  // namespace copref
