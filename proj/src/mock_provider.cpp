#include <algorithm>
#include <sstream>

#include "copref/error.hpp"
#include "copref/provider.hpp"

namespace copref {

namespace {

bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
         c >= 0x80;
}

// Greedy longest-match, non-overlapping; returns the number of tokens covered.
std::size_t count_hit_tokens(const std::vector<std::string>& tokens,
                             const std::vector<std::vector<std::string>>& terms) {
  std::size_t hits = 0;
  std::size_t i = 0;
  while (i < tokens.size()) {
    std::size_t best = 0;
    for (const auto& term : terms) {
      if (term.size() <= best || i + term.size() > tokens.size()) continue;
      if (std::equal(term.begin(), term.end(), tokens.begin() + static_cast<std::ptrdiff_t>(i))) {
        best = term.size();
      }
    }
    if (best > 0) {
      hits += best;
      i += best;
    } else {
      ++i;
    }
  }
  return hits;
}

std::size_t risk_level_index(int presence, std::size_t levels) {
  if (presence >= 2) return levels - 1;
  if (presence == 1) return levels >= 3 ? levels - 2 : levels - 1;
  return 0;
}

// ceil(rank * (bands - 1) / (levels - 1))
std::size_t band_for_rank(std::size_t rank, std::size_t levels, std::size_t bands) {
  if (levels <= 1 || bands <= 1) return 0;
  return (rank * (bands - 1) + levels - 2) / (levels - 1);
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      current.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Presence presence_from_hits(std::size_t hits, std::size_t total) {
  if (hits == 0 || total == 0) return Presence::clamped(-2);
  if (hits * 100 < total * 1) return Presence::clamped(-1);
  if (hits * 100 < total * 3) return Presence::clamped(0);
  if (hits * 100 < total * 8) return Presence::clamped(1);
  return Presence::clamped(2);
}

Lexicon lexicon_from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorCode::SchemaError, "lexicon: expected object");
  Lexicon lexicon;
  for (const auto& [raw, terms] : doc.items()) {
    if (!terms.is_array()) {
      fail(ErrorCode::SchemaError, "lexicon." + raw + ": expected array of terms");
    }
    auto& list = lexicon[Keyword::normalize(raw)];
    for (const auto& t : terms) {
      if (!t.is_string()) fail(ErrorCode::SchemaError, "lexicon." + raw + ": expected strings");
      list.push_back(t.get<std::string>());
    }
  }
  return lexicon;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
  try {
    return lexicon_from_json(json::parse(read_text_file(path, "lexicon")));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::SchemaError, std::string("lexicon: ") + e.what());
  }
}

MockProvider::MockProvider(Lexicon lexicon) {
  for (auto& [kw, terms] : lexicon) {
    Entry e{kw, {}};
    for (const auto& t : terms) {
      auto toks = tokenize(t);
      if (!toks.empty()) e.terms.push_back(std::move(toks));
    }
    entries_.push_back(std::move(e));
  }
}

VideoFeatures MockProvider::features_for_chunk(const Chunk& chunk) const {
  std::vector<std::string> tokens = tokenize(chunk.transcript());
  for (const auto& label : chunk.frame_labels()) {
    auto extra = tokenize(label);
    tokens.insert(tokens.end(), extra.begin(), extra.end());
  }
  VideoFeatures f;
  f.coverage_ms = chunk.duration_ms();
  for (const auto& e : entries_) {
    f.scores.emplace(e.keyword, presence_from_hits(count_hit_tokens(tokens, e.terms), tokens.size()));
  }
  return f;
}

VideoFeatures MockProvider::extract_features(std::span<const Chunk> chunks) {
  if (chunks.empty()) fail(ErrorCode::NoChunks, "no chunks to analyze");
  std::vector<FeaturePartial> partials;
  partials.reserve(chunks.size());
  for (const auto& c : chunks) {
    partials.push_back({features_for_chunk(c), std::max<DurationMs>(c.duration_ms(), 1)});
  }
  return combine_chunks(partials);
}

CensorshipResult MockProvider::censor(std::span<const Chunk> chunks,
                                      const CensorRequest& request) {
  if (!request.common) fail(ErrorCode::InvalidArgument, "censor: no guideline set");
  const CommonGuidelineSet& common = *request.common;

  CensorshipResult r;
  r.video_id = request.video_id;
  r.produced_at = request.produced_at;
  r.provider_id = id();
  r.features = extract_features(chunks);

  std::size_t band = 0;
  std::string worst;
  int worst_rank = 0;
  for (const auto& cat : common.risks) {
    const int p = r.features.presence_of(Keyword::normalize(cat.name)).value();
    const std::size_t idx = risk_level_index(p, cat.levels.size());
    std::ostringstream why;
    why << "lexicon presence for '" << cat.name << "' is " << p << " ("
        << Presence::clamped(p).label() << ")";
    r.risks.push_back({cat.name, cat.levels[idx], static_cast<int>(idx), why.str()});
    band = std::max(band, band_for_rank(idx, cat.levels.size(), common.age_bands.size()));
    if (static_cast<int>(idx) > worst_rank) {
      worst_rank = static_cast<int>(idx);
      worst = cat.name + " (" + cat.levels[idx] + ")";
    }
  }
  r.age_band = common.age_bands[band].name;

  for (const auto& cat : common.appropriateness) {
    const int p = r.features.presence_of(Keyword::normalize(cat.name)).value();
    const int target = std::max(0, p + 1);
    int value = -1;
    int smallest = 4;
    for (const auto& [label, v] : cat.scale) {
      if (v <= target) value = std::max(value, v);
      smallest = std::min(smallest, v);
    }
    if (value < 0) value = smallest;
    std::ostringstream why;
    why << "lexicon presence for '" << cat.name << "' is " << p << " ("
        << Presence::clamped(p).label() << ")";
    r.appropriateness.push_back({cat.name, value, why.str()});
  }

  std::vector<std::pair<int, std::string>> top;
  for (const auto& [kw, p] : r.features.scores) {
    if (p.value() >= 0) top.emplace_back(-p.value(), kw.str());
  }
  std::sort(top.begin(), top.end());
  std::ostringstream summary;
  summary << "Suggested age band: " << r.age_band << ". ";
  summary << "Highest risk: " << (worst.empty() ? "none" : worst) << ". ";
  summary << "Prominent keywords: ";
  if (top.empty()) summary << "none";
  for (std::size_t i = 0; i < top.size() && i < 5; ++i) {
    summary << (i ? ", " : "") << top[i].second << " ("
            << Presence::clamped(-top[i].first).label() << ")";
  }
  summary << '.';
  r.summary = summary.str();

  validate_result(r, common);
  return r;
}

}  // namespace copref
