#include <algorithm>
#include <cstdlib>
#include <future>
#include <semaphore>

#include <httplib.h>

#include "copref/error.hpp"
#include "copref/provider.hpp"

namespace copref {

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Url split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    fail(ErrorCode::InvalidArgument, "provider endpoint is not an absolute URL: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

// Models like to wrap JSON in markdown fences.
std::string strip_fences(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  s = s.substr(first);
  if (s.starts_with("```")) {
    const auto nl = s.find('\n');
    s = nl == std::string::npos ? std::string{} : s.substr(nl + 1);
    const auto close = s.rfind("```");
    if (close != std::string::npos) s.resize(close);
  }
  return s;
}

class Malformed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

const json& field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Malformed(std::string("missing field '") + key + "'");
  }
  return obj[key];
}

std::string string_field(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_string()) throw Malformed(std::string("field '") + key + "' is not a string");
  return v.get<std::string>();
}

std::string optional_text(const json& obj, const char* key) {
  if (!obj.contains(key) || obj[key].is_null()) return {};
  if (!obj[key].is_string()) throw Malformed(std::string("field '") + key + "' is not a string");
  return obj[key].get<std::string>();
}

const json& array_field(const json& obj, const char* key) {
  const json& v = field(obj, key);
  if (!v.is_array()) throw Malformed(std::string("field '") + key + "' is not an array");
  return v;
}

/// The structured payload for one chunk, after schema checks but before
/// guideline checks.
struct ChunkAnalysis {
  VideoFeatures features;
  std::vector<RiskFinding> risks;
  std::vector<AppropriatenessFinding> appropriateness;
  std::string age_band;
  std::string summary;
};

json unwrap_payload(const std::string& body) {
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::parse_error&) {
    throw Malformed("response body is not JSON");
  }
  if (doc.is_object() && doc.contains("choices")) {
    const json& choices = doc["choices"];
    if (!choices.is_array() || choices.empty()) throw Malformed("empty choices");
    const json& message = field(choices[0], "message");
    const std::string content = string_field(message, "content");
    try {
      doc = json::parse(strip_fences(content));
    } catch (const json::parse_error&) {
      throw Malformed("message content is not JSON");
    }
  }
  if (!doc.is_object()) throw Malformed("payload is not an object");
  return doc;
}

ChunkAnalysis parse_analysis(const json& doc, bool censor, DurationMs duration) {
  ChunkAnalysis a;
  a.features.coverage_ms = duration;
  for (const auto& k : array_field(doc, "keywords")) {
    const std::string name = string_field(k, "name");
    const json& score = field(k, "score");
    if (!score.is_number_integer()) throw Malformed("keyword score is not an integer");
    try {
      a.features.scores.insert_or_assign(Keyword::normalize(name),
                                         Presence::clamped(score.get<int>()));
    } catch (const Error& e) {
      throw Malformed(std::string("bad keyword: ") + e.what());
    }
  }
  if (!censor) return a;

  a.age_band = string_field(doc, "age_band");
  a.summary = string_field(doc, "summary");
  for (const auto& r : array_field(doc, "risks")) {
    a.risks.push_back({string_field(r, "category"), string_field(r, "level"), 0,
                       optional_text(r, "rationale")});
  }
  for (const auto& p : array_field(doc, "appropriateness")) {
    const json& v = field(p, "value");
    if (!v.is_number_integer()) throw Malformed("appropriateness value is not an integer");
    a.appropriateness.push_back(
        {string_field(p, "category"), v.get<int>(), optional_text(p, "rationale")});
  }
  return a;
}

const char* kOutputSchema =
    "Respond with a single JSON object and nothing else, using exactly this shape:\n"
    "{\n"
    "  \"keywords\": [{\"name\": string, \"score\": integer -2..2}],\n"
    "  \"risks\": [{\"category\": string, \"level\": string, \"rationale\": string}],\n"
    "  \"age_band\": string,\n"
    "  \"appropriateness\": [{\"category\": string, \"value\": integer, \"rationale\": string}],\n"
    "  \"summary\": string\n"
    "}\n"
    "Keyword scores mean: -2 very low, -1 low, 0 medium, 1 high, 2 very high amount of "
    "that content in the video.\n";

}  // namespace

std::string live_system_prompt(const std::string& guideline_context, bool censor) {
  std::string prompt =
      "You analyze short videos for a parent and a teenager who share a content "
      "preference. The user message contains keyframe-aligned transcript segments of "
      "one part of a video, each introduced by its time window and any visual labels.\n";
  if (censor) {
    prompt +=
        "Identify the video's main content keywords and how much of each it contains, "
        "rate every risk category using only the levels listed below, pick exactly one "
        "age band from the list below, rate every appropriateness category on its "
        "scale, and write a short summary explaining the ratings without quoting the "
        "transcript.\n\n";
    prompt += guideline_context;
    prompt += "\n";
  } else {
    prompt +=
        "Identify the video's main content keywords (short lowercase topics such as "
        "science, music, violence) and how much of each it contains. Fill risks and "
        "appropriateness with empty arrays, age_band and summary with empty strings.\n\n";
  }
  prompt += kOutputSchema;
  return prompt;
}

struct LiveProvider::Impl {
  explicit Impl(ProviderConfig c)
      : cfg(std::move(c)), url(split_url(cfg.endpoint)), in_flight(cfg.max_in_flight) {
    if (const char* t = std::getenv(kProviderTokenEnv)) token = t;
  }

  std::string user_prompt(const Chunk& chunk) const {
    std::string out;
    for (const auto& seg : chunk.segments) {
      out += "[" + std::to_string(seg.keyframe.window_start) + " ms - " +
             std::to_string(seg.keyframe.window_end) + " ms]";
      if (!seg.keyframe.frame.labels.empty()) {
        out += " visual:";
        for (const auto& l : seg.keyframe.frame.labels) out += " " + l;
      }
      out += "\n" + seg.transcript() + "\n";
    }
    return out;
  }

  std::string post(const json& body) {
    in_flight.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{in_flight};

    httplib::Client client(url.origin);
    const auto timeout = std::chrono::milliseconds(cfg.request_timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    auto res = client.Post(url.path, headers, body.dump(), "application/json");
    if (!res) {
      fail(ErrorCode::ProviderUnavailable,
           "provider request to " + cfg.endpoint + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
      fail(ErrorCode::ProviderUnavailable,
           "provider returned HTTP " + std::to_string(res->status));
    }
    return res->body;
  }

  ChunkAnalysis analyze(const Chunk& chunk, const std::string& system, bool censor) {
    const json body{{"model", cfg.model_name},
                    {"temperature", 0},
                    {"response_format", {{"type", "json_object"}}},
                    {"messages",
                     json::array({{{"role", "system"}, {"content", system}},
                                  {{"role", "user"}, {"content", user_prompt(chunk)}}})}};
    std::string last_problem;
    for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
      try {
        return parse_analysis(unwrap_payload(post(body)), censor,
                              std::max<DurationMs>(chunk.duration_ms(), 1));
      } catch (const Malformed& m) {
        last_problem = m.what();
      }
    }
    fail(ErrorCode::MalformedProviderOutput,
         "provider output failed schema validation after " +
             std::to_string(cfg.max_retries + 1) + " attempts: " + last_problem);
  }

  std::vector<ChunkAnalysis> analyze_all(std::span<const Chunk> chunks,
                                         const std::string& system, bool censor) {
    if (chunks.empty()) fail(ErrorCode::NoChunks, "no chunks to analyze");
    std::vector<std::future<ChunkAnalysis>> pending;
    pending.reserve(chunks.size());
    for (const auto& c : chunks) {
      pending.push_back(std::async(std::launch::async, [this, &c, &system, censor] {
        return analyze(c, system, censor);
      }));
    }
    std::vector<ChunkAnalysis> out;
    out.reserve(pending.size());
    for (auto& f : pending) f.wait();
    for (auto& f : pending) out.push_back(f.get());
    return out;
  }

  ProviderConfig cfg;
  Url url;
  std::string token;
  std::counting_semaphore<> in_flight;
};

LiveProvider::LiveProvider(ProviderConfig cfg) : impl_(std::make_unique<Impl>(std::move(cfg))) {}

LiveProvider::~LiveProvider() = default;

std::string LiveProvider::id() const { return "live:" + impl_->cfg.model_name; }

VideoFeatures LiveProvider::extract_features(std::span<const Chunk> chunks) {
  const auto analyses = impl_->analyze_all(chunks, live_system_prompt({}, false), false);
  std::vector<FeaturePartial> partials;
  for (const auto& a : analyses) partials.push_back({a.features, a.features.coverage_ms});
  return combine_chunks(partials);
}

CensorshipResult LiveProvider::censor(std::span<const Chunk> chunks,
                                      const CensorRequest& request) {
  if (!request.common) fail(ErrorCode::InvalidArgument, "censor: no guideline set");
  const CommonGuidelineSet& common = *request.common;
  const auto analyses =
      impl_->analyze_all(chunks, live_system_prompt(request.guideline_context, true), true);

  CensorshipResult r;
  r.video_id = request.video_id;
  r.produced_at = request.produced_at;
  r.provider_id = id();

  std::vector<FeaturePartial> partials;
  std::vector<std::vector<RiskFinding>> risk_partials;
  std::size_t band = 0;
  // category -> (weighted sum, total duration)
  std::map<std::string, std::pair<long long, long long>> appr;
  std::map<std::string, std::string> appr_rationale;
  for (const auto& a : analyses) {
    CensorshipResult partial;
    partial.age_band = a.age_band;
    partial.risks = a.risks;
    partial.appropriateness = a.appropriateness;
    validate_result(partial, common);
    partials.push_back({a.features, a.features.coverage_ms});
    risk_partials.push_back(partial.risks);
    band = std::max(band, *common.band_index(a.age_band));
    for (const auto& f : a.appropriateness) {
      auto& [sum, total] = appr[f.category];
      sum += static_cast<long long>(f.value) * a.features.coverage_ms;
      total += a.features.coverage_ms;
      if (!f.rationale.empty() && !appr_rationale.contains(f.category)) {
        appr_rationale[f.category] = f.rationale;
      }
    }
    if (!a.summary.empty()) r.summary += (r.summary.empty() ? "" : " ") + a.summary;
  }
  r.features = combine_chunks(partials);
  r.risks = combine_risks(risk_partials);
  r.age_band = common.age_bands[band].name;
  for (const auto& [name, acc] : appr) {
    const auto* cat = common.find_appropriateness(name);
    const long long target = (2 * acc.first + acc.second) / (2 * acc.second);
    int value = -1;
    int smallest = 4;
    for (const auto& [label, v] : cat->scale) {
      if (v <= target) value = std::max(value, v);
      smallest = std::min(smallest, v);
    }
    r.appropriateness.push_back({name, value < 0 ? smallest : value, appr_rationale[name]});
  }
  validate_result(r, common);
  return r;
}

}  // namespace copref
