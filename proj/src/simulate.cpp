#include <cstdio>
#include <random>
#include <set>

#include "copref/consensus.hpp"

namespace copref {

namespace {

constexpr const char* kVocabulary[] = {
    "science", "music",  "games",  "violence", "anime",   "sports",
    "cooking", "horror", "comedy", "history",  "fashion", "travel",
};
constexpr std::size_t kVocabularySize = std::size(kVocabulary);

class Dice {
 public:
  explicit Dice(std::uint64_t seed) : rng_(seed) {}

  /// Uniform in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  bool chance(double p) { return uniform() < p; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(rng_() % n); }
  Weight weight() { return Weight::from_int(static_cast<int>(below(5)) - 2); }

 private:
  std::mt19937_64 rng_;
};

PreferencePanel random_panel(Dice& dice, Role role, int max_keywords) {
  PreferencePanel::Entries entries;
  const std::size_t n = 1 + dice.below(static_cast<std::size_t>(std::max(1, max_keywords)));
  while (entries.size() < n) {
    entries.insert_or_assign(Keyword::normalize(kVocabulary[dice.below(kVocabularySize)]),
                             dice.weight());
  }
  return PreferencePanel(role, std::move(entries));
}

Modify random_modification(Dice& dice, const PreferencePanel& draft) {
  Modify m;
  std::set<Keyword> used;
  const std::size_t wanted = 1 + dice.below(3);
  while (m.changes.size() < wanted) {
    const Keyword kw = Keyword::normalize(kVocabulary[dice.below(kVocabularySize)]);
    if (!used.insert(kw).second) continue;
    const auto current = draft.weight_of(kw);
    if (!current) {
      m.changes.emplace_back(kw, Position::change(dice.weight()));
    } else if (dice.below(3) == 0) {
      m.changes.emplace_back(kw, Position::drop());
    } else {
      // a weight different from the current one
      const int shift = 1 + static_cast<int>(dice.below(4));
      const int w = (current->value() + 2 + shift) % 5 - 2;
      m.changes.emplace_back(kw, Position::change(Weight::from_int(w)));
    }
  }
  return m;
}

}  // namespace

SimulationStats simulate(const AgentPolicy& parent, const AgentPolicy& youth,
                         const SimulationConfig& cfg) {
  Dice dice(cfg.seed);
  SimulationStats stats;
  long long turns = 0;
  long long exchanges = 0;
  constexpr DurationMs kStep = 1000;

  for (int i = 0; i < cfg.sessions; ++i) {
    const Role initiator = dice.below(2) == 0 ? Role::Parent : Role::Youth;
    const Role reviewer = counterpart(initiator);
    const AgentPolicy& init_policy = initiator == Role::Parent ? parent : youth;
    const AgentPolicy& rev_policy = reviewer == Role::Parent ? parent : youth;
    TimestampMs now = 0;
    auto s = start_session("sim-" + std::to_string(i), initiator,
                           random_panel(dice, initiator, cfg.max_panel_keywords),
                           cfg.consensus, now);

    ++turns;
    if (dice.chance(rev_policy.accept_probability)) {
      s = reviewer_respond(s, reviewer, Accept{}, now += kStep);
    } else {
      s = reviewer_respond(s, reviewer, random_modification(dice, s.draft_panel), now += kStep);
      const auto conflicts = s.conflicts;
      for (std::size_t c = 0; c < conflicts.size(); ++c) {
        const std::string tag = "reason " + std::to_string(c);
        s = submit_reason(s, initiator, conflicts[c].keyword, tag, now += kStep);
        s = submit_reason(s, reviewer, conflicts[c].keyword, tag, now += kStep);
        turns += 2;
      }
    }

    while (s.stage != Stage::Finalized) {
      if (s.stage == Stage::PerspectiveTaking) {
        const auto conflicts = s.conflicts;
        for (const auto& c : conflicts) {
          if (c.resolved) continue;
          if (dice.chance(init_policy.compromise_probability)) {
            s = submit_position(s, initiator, c.keyword, c.reviewer_position, now += kStep);
            ++turns;
          }
          if (s.find_open(c.keyword) && dice.chance(rev_policy.compromise_probability)) {
            s = submit_position(s, reviewer, c.keyword, c.initiator_position, now += kStep);
            ++turns;
          }
        }
      }
      s = advance(s, now += kStep);
    }

    for (const auto& m : s.transcript) {
      if (m.template_id == "perspective_taking.present_reason") ++exchanges;
    }
    if (*s.outcome == Outcome::ConsensusReached) {
      ++stats.reached;
    } else {
      ++stats.failed;
    }
  }

  stats.sessions = cfg.sessions;
  if (cfg.sessions > 0) {
    const double n = cfg.sessions;
    stats.consensus_rate = stats.reached / n;
    stats.mean_one_party_turns = static_cast<double>(turns) / n;
    stats.mean_cross_party_exchanges = static_cast<double>(exchanges) / n;
  }
  return stats;
}

std::string format_stats(const SimulationStats& stats) {
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "sessions: %d\nreached: %d\nfailed: %d\nconsensus_rate: %.3f\n"
                "mean_one_party_turns: %.3f\nmean_cross_party_exchanges: %.3f\n",
                stats.sessions, stats.reached, stats.failed, stats.consensus_rate,
                stats.mean_one_party_turns, stats.mean_cross_party_exchanges);
  return buf;
}

}  // namespace copref
