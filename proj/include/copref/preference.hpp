#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "copref/features.hpp"
#include "copref/json.hpp"
#include "copref/keyword.hpp"
#include "copref/scale.hpp"
#include "copref/time.hpp"

namespace copref {

inline Keyword normalize_keyword(std::string_view raw) {
  return Keyword::normalize(raw);
}

enum class Role { Parent, Youth, Co };

std::string_view to_string(Role role);
Role parse_role(std::string_view text);
/// The other party of a Parent/Youth pair.
Role counterpart(Role role);

enum class VideoLabel { Suitable, Unsuitable };

struct LabeledVideoRef {
  std::string video_id;
  VideoLabel label = VideoLabel::Suitable;
};

/// Immutable keyword -> weight map owned by one role. Mutators return a new
/// panel with a strictly larger revision.
class PreferencePanel {
 public:
  using Entries = std::map<Keyword, Weight>;

  PreferencePanel() = default;
  explicit PreferencePanel(Role role, Entries entries = {},
                           std::uint64_t revision = 0,
                           TimestampMs updated_at = 0);

  Role role() const { return role_; }
  const Entries& entries() const { return entries_; }
  std::uint64_t revision() const { return revision_; }
  TimestampMs updated_at() const { return updated_at_; }

  std::optional<Weight> weight_of(const Keyword& kw) const;
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  /// Same entries under a different role; revision and timestamp kept.
  PreferencePanel with_role(Role role) const;

  friend bool operator==(const PreferencePanel&, const PreferencePanel&) = default;

 private:
  friend PreferencePanel set_preference(const PreferencePanel&, const Keyword&,
                                        Weight, TimestampMs);
  friend PreferencePanel remove_preference(const PreferencePanel&,
                                           const Keyword&, TimestampMs);
  friend PreferencePanel merge_entries(const PreferencePanel&, const Entries&,
                                       TimestampMs);

  Role role_ = Role::Co;
  Entries entries_;
  std::uint64_t revision_ = 0;
  TimestampMs updated_at_ = 0;
};

PreferencePanel set_preference(const PreferencePanel& panel, const Keyword& kw,
                               Weight w, TimestampMs now = 0);
PreferencePanel remove_preference(const PreferencePanel& panel,
                                  const Keyword& kw, TimestampMs now = 0);
/// Overwrites/inserts every entry of `updates` as a single revision.
PreferencePanel merge_entries(const PreferencePanel& panel,
                              const PreferencePanel::Entries& updates,
                              TimestampMs now = 0);

/// Indirect configuration. For each keyword present (presence >= 1) in any
/// labeled video, the candidate weight is the rounded mean of
/// sign(label) * presence over the videos where it is present.
PreferencePanel infer_from_videos(
    const PreferencePanel& panel,
    const std::vector<std::pair<LabeledVideoRef, VideoFeatures>>& labeled,
    TimestampMs now = 0);

/// One keyword on which two panels disagree. A missing side means the
/// keyword is absent from that panel.
struct PanelDifference {
  Keyword keyword;
  std::optional<Weight> left;
  std::optional<Weight> right;

  friend bool operator==(const PanelDifference&, const PanelDifference&) = default;
};

using ConflictSet = std::vector<PanelDifference>;

ConflictSet diff_panels(const PreferencePanel& a, const PreferencePanel& b);

// Panel document: {"role": ..., "revision": n, "entries": {kw: w}}
json panel_to_json(const PreferencePanel& panel);
PreferencePanel panel_from_json(const json& doc);

}  // namespace copref
