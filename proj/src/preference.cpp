#include "copref/preference.hpp"

#include <algorithm>
#include <set>

#include "copref/error.hpp"

namespace copref {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::size_t utf8_length(std::string_view s) {
  return static_cast<std::size_t>(std::count_if(
      s.begin(), s.end(), [](char c) { return (c & 0xC0) != 0x80; }));
}

}  // namespace

Keyword Keyword::normalize(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char c : raw) {
    if (is_space(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
  }
  if (out.empty()) fail(ErrorCode::EmptyKeyword, "keyword is empty");
  if (utf8_length(out) > kMaxKeywordLength) {
    fail(ErrorCode::TooLong, "keyword longer than " +
                                 std::to_string(kMaxKeywordLength) +
                                 " characters: '" + out + "'");
  }
  return Keyword(std::move(out));
}

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Parent: return "parent";
    case Role::Youth: return "youth";
    case Role::Co: return "co";
  }
  return "co";
}

Role parse_role(std::string_view text) {
  if (text == "parent") return Role::Parent;
  if (text == "youth") return Role::Youth;
  if (text == "co") return Role::Co;
  fail(ErrorCode::InvalidRole, "unknown role '" + std::string(text) + "'");
}

Role counterpart(Role role) {
  if (role == Role::Parent) return Role::Youth;
  if (role == Role::Youth) return Role::Parent;
  fail(ErrorCode::InvalidRole, "co role has no counterpart");
}

PreferencePanel::PreferencePanel(Role role, Entries entries,
                                 std::uint64_t revision, TimestampMs updated_at)
    : role_(role),
      entries_(std::move(entries)),
      revision_(revision),
      updated_at_(updated_at) {
  if (entries_.size() > kMaxPanelEntries) {
    fail(ErrorCode::PanelFull, "panel exceeds " +
                                   std::to_string(kMaxPanelEntries) +
                                   " entries");
  }
}

std::optional<Weight> PreferencePanel::weight_of(const Keyword& kw) const {
  if (auto it = entries_.find(kw); it != entries_.end()) return it->second;
  return std::nullopt;
}

PreferencePanel PreferencePanel::with_role(Role role) const {
  PreferencePanel copy = *this;
  copy.role_ = role;
  return copy;
}

PreferencePanel set_preference(const PreferencePanel& panel, const Keyword& kw,
                               Weight w, TimestampMs now) {
  PreferencePanel next = panel;
  if (!next.entries_.contains(kw) && next.entries_.size() >= kMaxPanelEntries) {
    fail(ErrorCode::PanelFull, "panel is full; cannot add '" + kw.str() + "'");
  }
  next.entries_[kw] = w;
  ++next.revision_;
  next.updated_at_ = std::max(panel.updated_at_, now);
  return next;
}

PreferencePanel remove_preference(const PreferencePanel& panel,
                                  const Keyword& kw, TimestampMs now) {
  PreferencePanel next = panel;
  next.entries_.erase(kw);
  ++next.revision_;
  next.updated_at_ = std::max(panel.updated_at_, now);
  return next;
}

PreferencePanel merge_entries(const PreferencePanel& panel,
                              const PreferencePanel::Entries& updates,
                              TimestampMs now) {
  PreferencePanel next = panel;
  for (const auto& [kw, w] : updates) next.entries_[kw] = w;
  if (next.entries_.size() > kMaxPanelEntries) {
    fail(ErrorCode::PanelFull, "merge would exceed " +
                                   std::to_string(kMaxPanelEntries) +
                                   " entries");
  }
  ++next.revision_;
  next.updated_at_ = std::max(panel.updated_at_, now);
  return next;
}

PreferencePanel infer_from_videos(
    const PreferencePanel& panel,
    const std::vector<std::pair<LabeledVideoRef, VideoFeatures>>& labeled,
    TimestampMs now) {
  if (labeled.empty()) fail(ErrorCode::NoVideos, "no labeled videos given");

  // Integer sums keep the mean independent of input order.
  std::map<Keyword, std::pair<long, long>> acc;  // keyword -> (sum, count)
  for (const auto& [ref, features] : labeled) {
    const int sign = ref.label == VideoLabel::Suitable ? 1 : -1;
    for (const auto& [kw, presence] : features.scores) {
      if (presence.value() < 1) continue;
      auto& [sum, count] = acc[kw];
      sum += sign * presence.value();
      ++count;
    }
  }

  PreferencePanel::Entries candidates;
  for (const auto& [kw, sc] : acc) {
    const double mean = static_cast<double>(sc.first) / static_cast<double>(sc.second);
    candidates.emplace(kw, Weight::clamped(round_half_away(mean)));
  }
  return merge_entries(panel, candidates, now);
}

ConflictSet diff_panels(const PreferencePanel& a, const PreferencePanel& b) {
  ConflictSet out;
  auto ia = a.entries().begin();
  auto ib = b.entries().begin();
  const auto ea = a.entries().end();
  const auto eb = b.entries().end();
  while (ia != ea || ib != eb) {
    if (ib == eb || (ia != ea && ia->first < ib->first)) {
      out.push_back({ia->first, ia->second, std::nullopt});
      ++ia;
    } else if (ia == ea || ib->first < ia->first) {
      out.push_back({ib->first, std::nullopt, ib->second});
      ++ib;
    } else {
      if (ia->second != ib->second) {
        out.push_back({ia->first, ia->second, ib->second});
      }
      ++ia;
      ++ib;
    }
  }
  return out;
}

json panel_to_json(const PreferencePanel& panel) {
  json entries = json::object();
  for (const auto& [kw, w] : panel.entries()) entries[kw.str()] = w.value();
  return json{{"role", to_string(panel.role())},
              {"revision", panel.revision()},
              {"entries", std::move(entries)}};
}

PreferencePanel panel_from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorCode::SchemaError, "panel: expected object");
  if (!doc.contains("role") || !doc["role"].is_string()) {
    fail(ErrorCode::SchemaError, "panel.role: expected string");
  }
  const Role role = parse_role(doc["role"].get<std::string>());
  std::uint64_t revision = 0;
  if (doc.contains("revision")) {
    if (!doc["revision"].is_number_unsigned()) {
      fail(ErrorCode::SchemaError, "panel.revision: expected non-negative integer");
    }
    revision = doc["revision"].get<std::uint64_t>();
  }
  PreferencePanel::Entries entries;
  if (doc.contains("entries")) {
    if (!doc["entries"].is_object()) {
      fail(ErrorCode::SchemaError, "panel.entries: expected object");
    }
    for (const auto& [raw, value] : doc["entries"].items()) {
      if (!value.is_number_integer()) {
        fail(ErrorCode::SchemaError, "panel.entries." + raw + ": expected integer");
      }
      const Keyword kw = Keyword::normalize(raw);
      if (entries.contains(kw)) {
        fail(ErrorCode::SchemaError,
             "panel.entries: duplicate keyword after normalization: '" +
                 kw.str() + "'");
      }
      entries.emplace(kw, Weight::from_int(value.get<int>()));
    }
  }
  TimestampMs updated_at = 0;
  if (doc.contains("updated_at") && doc["updated_at"].is_number_integer()) {
    updated_at = doc["updated_at"].get<TimestampMs>();
  }
  return PreferencePanel(role, std::move(entries), revision, updated_at);
}

}  // namespace copref
