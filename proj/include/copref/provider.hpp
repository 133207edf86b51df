#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "copref/features.hpp"
#include "copref/guidelines.hpp"
#include "copref/ingest.hpp"
#include "copref/json.hpp"

namespace copref {

struct RiskFinding {
  std::string category;
  std::string level;
  int rank = 0;  // index of `level` in the category's level list
  std::string rationale;

  friend bool operator==(const RiskFinding&, const RiskFinding&) = default;
};

struct AppropriatenessFinding {
  std::string category;
  int value = 0;
  std::string rationale;

  friend bool operator==(const AppropriatenessFinding&,
                         const AppropriatenessFinding&) = default;
};

struct CensorshipResult {
  std::string video_id;
  std::string age_band;
  std::vector<RiskFinding> risks;
  std::vector<AppropriatenessFinding> appropriateness;
  VideoFeatures features;
  std::string summary;
  TimestampMs produced_at = 0;
  std::string provider_id;

  friend bool operator==(const CensorshipResult&, const CensorshipResult&) = default;
};

json result_to_json(const CensorshipResult& result);
CensorshipResult result_from_json(const json& doc);

/// Checks every category, level and band against `common` and fills in
/// risk ranks. Throws GuidelineViolation on the first unknown reference.
void validate_result(CensorshipResult& result, const CommonGuidelineSet& common);

enum class ProviderKind { Mock, Live };

struct ProviderConfig {
  ProviderKind kind = ProviderKind::Mock;
  std::string endpoint;    // live only
  std::string model_name;  // live only
  std::size_t context_budget = 8000;
  DurationMs request_timeout_ms = 60'000;
  std::filesystem::path lexicon_path;  // mock only
  int max_in_flight = 4;
  int max_retries = 2;

  void validate() const;
};

/// Relative lexicon paths resolve against `base_dir`.
ProviderConfig provider_config_from_json(const json& doc,
                                         const std::filesystem::path& base_dir = {});

inline constexpr const char* kProviderTokenEnv = "YC_PROVIDER_TOKEN";

struct CensorRequest {
  std::string video_id;
  std::string guideline_context;
  const CommonGuidelineSet* common = nullptr;
  TimestampMs produced_at = 0;
};

/// Turns chunks of an ingested video into features and censorship results.
/// Implementations are stateless between calls and safe to share.
class AnalysisProvider {
 public:
  virtual ~AnalysisProvider() = default;

  virtual std::string id() const = 0;

  /// Per-chunk extraction followed by combine_chunks. Throws NoChunks on an
  /// empty span.
  virtual VideoFeatures extract_features(std::span<const Chunk> chunks) = 0;

  /// The returned result has passed validate_result against request.common.
  virtual CensorshipResult censor(std::span<const Chunk> chunks,
                                  const CensorRequest& request) = 0;
};

std::unique_ptr<AnalysisProvider> make_provider(const ProviderConfig& cfg);

// ---------------------------------------------------------------------------
// Chunk combination

struct FeaturePartial {
  VideoFeatures features;
  DurationMs duration_ms = 0;
};

/// Per keyword: duration-weighted mean presence across partials, rounded
/// half away from zero. A keyword missing from a partial counts as -2 there.
VideoFeatures combine_chunks(std::span<const FeaturePartial> partials);

/// Highest-ranked finding per category, sorted by category name. Ties keep
/// the lexicographically smaller rationale so the result is order-free.
std::vector<RiskFinding> combine_risks(
    std::span<const std::vector<RiskFinding>> partials);

// ---------------------------------------------------------------------------
// Mock provider

/// keyword -> list of terms; a term may span several words.
using Lexicon = std::map<Keyword, std::vector<std::string>>;

Lexicon load_lexicon(const std::filesystem::path& path);
Lexicon lexicon_from_json(const json& doc);

/// Lowercased ASCII alphanumeric runs; bytes >= 0x80 count as word bytes.
std::vector<std::string> tokenize(std::string_view text);

/// Presence from the share of lexicon-hit tokens r:
/// r = 0 -> -2, r < 1% -> -1, r < 3% -> 0, r < 8% -> 1, otherwise 2.
Presence presence_from_hits(std::size_t hit_tokens, std::size_t total_tokens);

class MockProvider final : public AnalysisProvider {
 public:
  explicit MockProvider(Lexicon lexicon);

  std::string id() const override { return "mock"; }
  VideoFeatures extract_features(std::span<const Chunk> chunks) override;
  CensorshipResult censor(std::span<const Chunk> chunks,
                          const CensorRequest& request) override;

  VideoFeatures features_for_chunk(const Chunk& chunk) const;

 private:
  struct Entry {
    Keyword keyword;
    std::vector<std::vector<std::string>> terms;
  };
  std::vector<Entry> entries_;
};

// ---------------------------------------------------------------------------
// Live provider

/// Generic chat-completion adapter. Sends one request per chunk and expects a
/// JSON object {keywords: [{name, score}], risks: [{category, level,
/// rationale}], age_band, appropriateness: [{category, value, rationale}],
/// summary}, either as the whole response body or as the content of
/// choices[0].message. Responses failing the schema are retried
/// `max_retries` times before MalformedProviderOutput.
class LiveProvider final : public AnalysisProvider {
 public:
  explicit LiveProvider(ProviderConfig cfg);
  ~LiveProvider() override;

  std::string id() const override;
  VideoFeatures extract_features(std::span<const Chunk> chunks) override;
  CensorshipResult censor(std::span<const Chunk> chunks,
                          const CensorRequest& request) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// The system prompt sent to the live adapter. Exposed for tests and docs.
std::string live_system_prompt(const std::string& guideline_context, bool censor);

}  // namespace copref
