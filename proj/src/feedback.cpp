#include "copref/feedback.hpp"

#include <algorithm>
#include <set>
#include <sstream>
#include <tuple>

#include "copref/error.hpp"

namespace copref {

namespace {

int sign(int v) { return (v > 0) - (v < 0); }

// round(num / den), ties away from zero, den > 0.
long long rounded_ratio(long long num, long long den) {
  const long long mag = (2 * (num < 0 ? -num : num) + den) / (2 * den);
  return num < 0 ? -mag : mag;
}

[[noreturn]] void schema_fail(const std::string& field, const std::string& what) {
  fail(ErrorCode::SchemaError, field + ": " + what);
}

const json& require(const json& doc, const char* key, const std::string& where) {
  if (!doc.is_object() || !doc.contains(key)) schema_fail(where + "." + key, "missing");
  return doc[key];
}

}  // namespace

std::string_view to_string(Alignment a) {
  switch (a) {
    case Alignment::Aligned: return "aligned";
    case Alignment::Misaligned: return "misaligned";
    case Alignment::Informational: return "informational";
  }
  return "informational";
}

Alignment parse_alignment(std::string_view text) {
  if (text == "aligned") return Alignment::Aligned;
  if (text == "misaligned") return Alignment::Misaligned;
  if (text == "informational") return Alignment::Informational;
  fail(ErrorCode::SchemaError, "unknown classification '" + std::string(text) + "'");
}

Alignment classify(Weight pref, Presence score) {
  const int product = sign(pref.value()) * sign(score.value());
  if (product > 0) return Alignment::Aligned;
  if (product < 0) return Alignment::Misaligned;
  if (pref.value() == 0 && score.value() == 0) return Alignment::Aligned;
  return Alignment::Informational;
}

std::string_view label_of(int value, LabelScale scale) {
  return scale == LabelScale::Preference ? Weight::from_int(value).label()
                                         : Presence::from_int(value).label();
}

InTimeFeedback build_in_time(const PreferencePanel& co_pref, const CensorshipResult& result) {
  if (co_pref.role() != Role::Co) {
    fail(ErrorCode::WrongRole, "feedback needs the co-preference panel, got role " +
                                   std::string(to_string(co_pref.role())));
  }
  InTimeFeedback fb;
  fb.video_id = result.video_id;
  fb.produced_at = result.produced_at;
  fb.common = {result.age_band, result.risks, result.appropriateness, result.summary};
  for (const auto& [kw, w] : co_pref.entries()) {
    const Presence s = result.features.presence_of(kw);
    fb.entries.push_back({kw, w, s, classify(w, s)});
  }
  return fb;
}

json feedback_to_json(const InTimeFeedback& fb) {
  json entries = json::array();
  for (const auto& e : fb.entries) {
    entries.push_back({{"keyword", e.keyword.str()},
                       {"pref_weight", e.pref_weight.value()},
                       {"pref_label", e.pref_weight.label()},
                       {"video_score", e.video_score.value()},
                       {"score_label", e.video_score.label()},
                       {"classification", to_string(e.classification)}});
  }
  json risks = json::array();
  for (const auto& r : fb.common.risks) {
    risks.push_back({{"category", r.category},
                     {"level", r.level},
                     {"rank", r.rank},
                     {"rationale", r.rationale}});
  }
  json appr = json::array();
  for (const auto& a : fb.common.appropriateness) {
    appr.push_back({{"category", a.category}, {"value", a.value}, {"rationale", a.rationale}});
  }
  return {{"video_id", fb.video_id},
          {"produced_at", fb.produced_at},
          {"entries", std::move(entries)},
          {"common",
           {{"age_band", fb.common.age_band},
            {"risks", std::move(risks)},
            {"appropriateness", std::move(appr)},
            {"summary", fb.common.summary}}}};
}

InTimeFeedback feedback_from_json(const json& doc) {
  InTimeFeedback fb;
  try {
    fb.video_id = require(doc, "video_id", "feedback").get<std::string>();
    fb.produced_at = require(doc, "produced_at", "feedback").get<TimestampMs>();
    for (const auto& e : require(doc, "entries", "feedback")) {
      fb.entries.push_back(
          {Keyword::normalize(require(e, "keyword", "feedback.entries").get<std::string>()),
           Weight::from_int(require(e, "pref_weight", "feedback.entries").get<int>()),
           Presence::from_int(require(e, "video_score", "feedback.entries").get<int>()),
           parse_alignment(require(e, "classification", "feedback.entries").get<std::string>())});
    }
    const json& common = require(doc, "common", "feedback");
    fb.common.age_band = require(common, "age_band", "feedback.common").get<std::string>();
    fb.common.summary = require(common, "summary", "feedback.common").get<std::string>();
    for (const auto& r : require(common, "risks", "feedback.common")) {
      fb.common.risks.push_back(
          {require(r, "category", "feedback.common.risks").get<std::string>(),
           require(r, "level", "feedback.common.risks").get<std::string>(),
           r.value("rank", 0), r.value("rationale", "")});
    }
    for (const auto& a : require(common, "appropriateness", "feedback.common")) {
      fb.common.appropriateness.push_back(
          {require(a, "category", "feedback.common.appropriateness").get<std::string>(),
           require(a, "value", "feedback.common.appropriateness").get<int>(),
           a.value("rationale", "")});
    }
  } catch (const json::exception& e) {
    schema_fail("feedback", e.what());
  }
  return fb;
}

void Period::validate() const {
  if (from >= to) fail(ErrorCode::InvalidArgument, "period: from must be before to");
  if (bucket <= 0) fail(ErrorCode::InvalidArgument, "period: bucket must be positive");
}

std::size_t Period::bucket_count() const {
  return static_cast<std::size_t>((to - from + bucket - 1) / bucket);
}

SummaryReport aggregate(std::span<const InTimeFeedback> records, const Period& period) {
  period.validate();
  SummaryReport report;
  report.period = period;

  struct Acc {
    long long sum = 0;
    long long n = 0;
    // (produced_at, video_id, weight) of the latest record carrying the keyword
    std::tuple<TimestampMs, std::string, int> latest{0, {}, 0};
    bool seen = false;
  };
  std::map<Keyword, Acc> acc;
  std::set<std::string> categories;
  std::vector<const InTimeFeedback*> included;

  for (const auto& r : records) {
    if (r.produced_at < period.from || r.produced_at >= period.to) continue;
    included.push_back(&r);
    ++report.video_count;
    for (const auto& e : r.entries) {
      Acc& a = acc[e.keyword];
      a.sum += e.video_score.value();
      ++a.n;
      std::tuple<TimestampMs, std::string, int> key{r.produced_at, r.video_id,
                                                     e.pref_weight.value()};
      if (!a.seen || key > a.latest) a.latest = std::move(key);
      a.seen = true;
    }
    for (const auto& f : r.common.risks) categories.insert(f.category);
  }

  for (const auto& [kw, a] : acc) {
    const int rounded = static_cast<int>(rounded_ratio(a.sum, a.n));
    const Weight w = Weight::from_int(std::get<2>(a.latest));
    report.per_keyword.emplace(
        kw, KeywordSummary{static_cast<double>(a.sum) / static_cast<double>(a.n), w,
                           std::string(label_of(rounded, LabelScale::Presence)),
                           classify(w, Presence::from_int(rounded))});
  }

  const std::size_t buckets = period.bucket_count();
  for (const auto& c : categories) {
    report.risk_frequency[c] = 0;
    report.risk_trend[c].assign(buckets, 0);
  }
  for (const auto* r : included) {
    // A category counts once per video even if listed twice.
    std::set<std::string> flagged;
    for (const auto& f : r->common.risks) {
      if (f.rank > 0) flagged.insert(f.category);
    }
    const auto b = static_cast<std::size_t>((r->produced_at - period.from) / period.bucket);
    for (const auto& c : flagged) {
      ++report.risk_frequency[c];
      ++report.risk_trend[c][b];
    }
  }
  return report;
}

json report_to_json(const SummaryReport& report) {
  json per_keyword = json::object();
  for (const auto& [kw, s] : report.per_keyword) {
    per_keyword[kw.str()] = {{"mean_score", s.mean_score},
                             {"pref_weight", s.pref_weight.value()},
                             {"pref_label", s.pref_weight.label()},
                             {"display_label", s.display_label},
                             {"classification", to_string(s.classification)}};
  }
  json trend = json::object();
  for (const auto& [cat, series] : report.risk_trend) {
    json points = json::array();
    for (std::size_t i = 0; i < series.size(); ++i) {
      points.push_back({{"bucket_start",
                         report.period.from + static_cast<TimestampMs>(i) * report.period.bucket},
                        {"count", series[i]}});
    }
    trend[cat] = std::move(points);
  }
  return {{"period",
           {{"from", report.period.from},
            {"to", report.period.to},
            {"bucket_ms", report.period.bucket}}},
          {"video_count", report.video_count},
          {"per_keyword", std::move(per_keyword)},
          {"risk_frequency", report.risk_frequency},
          {"risk_trend", std::move(trend)}};
}

std::string trend_csv(const SummaryReport& report) {
  std::ostringstream out;
  out << "category,bucket_start,count\n";
  for (const auto& [cat, series] : report.risk_trend) {
    for (std::size_t i = 0; i < series.size(); ++i) {
      const TimestampMs start =
          report.period.from + static_cast<TimestampMs>(i) * report.period.bucket;
      // Categories are free text; quote them for CSV safety.
      std::string quoted = "\"";
      for (char c : cat) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
      quoted += '"';
      out << quoted << ',' << format_timestamp(start) << ',' << series[i] << '\n';
    }
  }
  return out.str();
}

}  // namespace copref
