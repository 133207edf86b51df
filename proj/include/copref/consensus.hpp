#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "copref/json.hpp"
#include "copref/preference.hpp"

namespace copref {

enum class Stage {
  AwaitingInitialPanel,
  InitialProposal,
  SelfEvaluation,
  PerspectiveTaking,
  FinalProposal,
  Finalized,
};

std::string_view to_string(Stage stage);
Stage parse_stage(std::string_view text);

class Position {
 public:
  enum class Kind { Keep, Change, Drop };

  Position() = default;
  static Position keep() { return Position(Kind::Keep, Weight{}); }
  static Position change(Weight w) { return Position(Kind::Change, w); }
  static Position drop() { return Position(Kind::Drop, Weight{}); }

  Kind kind() const { return kind_; }
  /// Meaningful only for Change.
  Weight weight() const { return weight_; }

  /// Keep resolves to Change(current) when the keyword is in the draft and
  /// to Drop otherwise.
  Position resolve(std::optional<Weight> current) const;

  std::string describe() const;

  friend bool operator==(const Position&, const Position&) = default;

 private:
  Position(Kind kind, Weight w) : kind_(kind), weight_(w) {}
  Kind kind_ = Kind::Keep;
  Weight weight_;
};

json position_to_json(const Position& p);
Position position_from_json(const json& doc);

/// Stand-in for a reason a party declined to give.
inline constexpr std::string_view kNoReason = "(no reason given)";

struct Conflict {
  Keyword keyword;
  Position initiator_position;
  Position reviewer_position;
  std::optional<std::string> initiator_reason;
  std::optional<std::string> reviewer_reason;
  bool resolved = false;

  friend bool operator==(const Conflict&, const Conflict&) = default;
};

enum class Outcome { ConsensusReached, ConsensusFailed };

std::string_view to_string(Outcome outcome);

struct MediatorMessage {
  Stage stage = Stage::InitialProposal;
  Role addressee = Role::Parent;
  std::string template_id;
  std::map<std::string, std::string> payload;  // template slot -> value
  std::string text;                            // rendered from the catalog
  /// Messages with the session's current epoch are the pending ones.
  int epoch = 0;

  friend bool operator==(const MediatorMessage&, const MediatorMessage&) = default;
};

/// template_id -> message skeleton with {slot} placeholders.
using TemplateCatalog = std::map<std::string, std::string>;

const TemplateCatalog& builtin_templates();
TemplateCatalog templates_from_json(const json& doc);
json templates_to_json(const TemplateCatalog& catalog);

/// Fills every {slot}. Throws InvalidArgument for an unknown template, a
/// missing slot or an empty value.
std::string render_template(const TemplateCatalog& catalog, const std::string& template_id,
                            const std::map<std::string, std::string>& payload);

struct ConsensusConfig {
  int max_iterations = 3;
  DurationMs session_timeout_ms = 600'000;

  void validate() const;
  friend bool operator==(const ConsensusConfig&, const ConsensusConfig&) = default;
};

json consensus_config_to_json(const ConsensusConfig& cfg);
ConsensusConfig consensus_config_from_json(const json& doc);

/// One state-changing call. The event list of a session is its replay log.
struct ConsensusEvent {
  std::uint64_t seq = 0;
  std::string actor;  // "parent", "youth" or "system"
  std::string kind;   // start, respond, reason, position, advance
  json payload;
  TimestampMs at = 0;

  friend bool operator==(const ConsensusEvent&, const ConsensusEvent&) = default;
};

json event_to_json(const ConsensusEvent& e);
ConsensusEvent event_from_json(const json& doc);

struct ConsensusSession {
  std::string session_id;
  Role initiator = Role::Parent;
  ConsensusConfig config;
  PreferencePanel initiator_panel;
  PreferencePanel draft_panel;
  Stage stage = Stage::AwaitingInitialPanel;
  std::vector<Conflict> conflicts;
  int iteration = 0;
  std::optional<Outcome> outcome;
  std::optional<PreferencePanel> co_panel;
  std::vector<MediatorMessage> transcript;
  std::vector<ConsensusEvent> events;
  TimestampMs started_at = 0;
  TimestampMs deadline = 0;
  int epoch = 0;
  /// Set when a position changed since the current PerspectiveTaking round
  /// began.
  bool changed_this_round = false;

  Role reviewer() const { return counterpart(initiator); }
  const Conflict* find_open(const Keyword& kw) const;
  std::vector<MediatorMessage> pending_for(Role addressee) const;

  friend bool operator==(const ConsensusSession&, const ConsensusSession&) = default;
};

struct Accept {};
struct Modify {
  std::vector<std::pair<Keyword, Position>> changes;
};
using ReviewDecision = std::variant<Accept, Modify>;

ConsensusSession start_session(std::string session_id, Role initiator,
                               const PreferencePanel& panel, const ConsensusConfig& cfg,
                               TimestampMs now);

ConsensusSession reviewer_respond(const ConsensusSession& s, Role actor,
                                  const ReviewDecision& decision, TimestampMs now);

ConsensusSession submit_reason(const ConsensusSession& s, Role actor, const Keyword& kw,
                               std::string_view reason, TimestampMs now);

ConsensusSession submit_position(const ConsensusSession& s, Role actor, const Keyword& kw,
                                 const Position& position, TimestampMs now);

/// Ends the current round. In SelfEvaluation, missing reasons become
/// kNoReason. In InitialProposal only the deadline can end the stage.
ConsensusSession advance(const ConsensusSession& s, TimestampMs now);

/// The co-preference panel and outcome of a finalized session.
std::pair<PreferencePanel, Outcome> finalize(const ConsensusSession& s);

/// Re-applies one recorded event. A start event ignores `s`.
ConsensusSession apply_event(const ConsensusSession& s, const ConsensusEvent& e);

/// Rebuilds a session by re-applying its events in order.
ConsensusSession replay(const std::vector<ConsensusEvent>& events);

/// Snapshot with stage, conflicts, panels and the pending messages per
/// addressee. Reasons appear only inside conflicts and messages.
json session_to_json(const ConsensusSession& s);

/// {"session_id", "events": [...]}: the replay format.
json session_export(const ConsensusSession& s);
ConsensusSession session_import(const json& doc);

// ---------------------------------------------------------------------------
// Simulation

struct AgentPolicy {
  double accept_probability = 0.5;
  double compromise_probability = 0.5;
};

struct SimulationConfig {
  int sessions = 100;
  std::uint64_t seed = 0;
  ConsensusConfig consensus;
  int max_panel_keywords = 6;
};

struct SimulationStats {
  int sessions = 0;
  int reached = 0;
  int failed = 0;
  double consensus_rate = 0;
  double mean_one_party_turns = 0;
  double mean_cross_party_exchanges = 0;

  friend bool operator==(const SimulationStats&, const SimulationStats&) = default;
};

/// Scripted sessions between a parent agent (`parent`) and a youth agent
/// (`youth`). The initiator is drawn per session. One-party turns count the
/// inputs either party submits; cross-party exchanges count reasons relayed
/// from one party to the other.
SimulationStats simulate(const AgentPolicy& parent, const AgentPolicy& youth,
                         const SimulationConfig& cfg);

std::string format_stats(const SimulationStats& stats);

}  // namespace copref
