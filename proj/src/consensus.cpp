#include "copref/consensus.hpp"

#include <algorithm>
#include <set>

#include "copref/error.hpp"

namespace copref {

namespace {

constexpr std::string_view kStageNames[] = {
    "awaiting_initial_panel", "initial_proposal", "self_evaluation",
    "perspective_taking",     "final_proposal",   "finalized",
};

std::string role_name(Role r) { return std::string(to_string(r)); }

std::string describe_panel(const PreferencePanel& p) {
  if (p.empty()) return "(empty)";
  std::string out;
  for (const auto& [kw, w] : p.entries()) {
    if (!out.empty()) out += ", ";
    out += kw.str() + " " + std::to_string(w.value()) + " (" + std::string(w.label()) + ")";
  }
  return out;
}

json panel_doc(const PreferencePanel& p) {
  json doc = panel_to_json(p);
  doc["updated_at"] = p.updated_at();
  return doc;
}

Conflict* find_open_mut(ConsensusSession& s, const Keyword& kw) {
  for (auto& c : s.conflicts) {
    if (c.keyword == kw && !c.resolved) return &c;
  }
  return nullptr;
}

bool positions_match(const ConsensusSession& s, const Conflict& c) {
  const auto current = s.draft_panel.weight_of(c.keyword);
  return c.initiator_position.resolve(current) == c.reviewer_position.resolve(current);
}

void require_party(Role actor) {
  if (actor == Role::Co) fail(ErrorCode::WrongActor, "only the parent or the youth can act");
}

void record(ConsensusSession& s, std::string actor, std::string kind, json payload,
            TimestampMs at) {
  s.events.push_back({s.events.size(), std::move(actor), std::move(kind), std::move(payload), at});
}

void emit(ConsensusSession& s, Role to, const std::string& template_id,
          std::map<std::string, std::string> payload) {
  MediatorMessage m;
  m.stage = s.stage;
  m.addressee = to;
  m.template_id = template_id;
  m.text = render_template(builtin_templates(), template_id, payload);
  m.payload = std::move(payload);
  m.epoch = s.epoch;
  s.transcript.push_back(std::move(m));
}

void enter(ConsensusSession& s, Stage stage) {
  s.stage = stage;
  ++s.epoch;
}

void ask_reasons(ConsensusSession& s) {
  for (const auto& c : s.conflicts) {
    for (Role r : {s.initiator, s.reviewer()}) {
      const bool init = r == s.initiator;
      emit(s, r, "self_evaluation.ask_reason",
           {{"keyword", c.keyword.str()},
            {"counterpart", role_name(counterpart(r))},
            {"own_position", (init ? c.initiator_position : c.reviewer_position).describe()},
            {"other_position", (init ? c.reviewer_position : c.initiator_position).describe()}});
    }
  }
}

void present_reasons(ConsensusSession& s) {
  for (const auto& c : s.conflicts) {
    if (c.resolved) continue;
    for (Role r : {s.initiator, s.reviewer()}) {
      const bool init = r == s.initiator;
      const auto& reason = init ? c.reviewer_reason : c.initiator_reason;
      emit(s, r, "perspective_taking.present_reason",
           {{"keyword", c.keyword.str()},
            {"counterpart", role_name(counterpart(r))},
            {"reason", reason ? *reason : std::string(kNoReason)},
            {"own_position", (init ? c.initiator_position : c.reviewer_position).describe()},
            {"other_position", (init ? c.reviewer_position : c.initiator_position).describe()}});
    }
  }
}

void enter_perspective_taking(ConsensusSession& s) {
  enter(s, Stage::PerspectiveTaking);
  s.changed_this_round = false;
  present_reasons(s);
}

void finish(ConsensusSession& s, Outcome outcome, const std::string& cause, TimestampMs now) {
  enter(s, Stage::Finalized);
  s.outcome = outcome;
  if (outcome == Outcome::ConsensusReached) {
    auto entries = s.draft_panel.entries();
    bool touched = false;
    for (const auto& c : s.conflicts) {
      const Position p = c.initiator_position.resolve(s.draft_panel.weight_of(c.keyword));
      if (p.kind() == Position::Kind::Change) {
        entries.insert_or_assign(c.keyword, p.weight());
      } else {
        entries.erase(c.keyword);
      }
      touched = true;
    }
    if (touched) {
      s.draft_panel = PreferencePanel(s.initiator, std::move(entries),
                                      s.draft_panel.revision() + 1, now);
    }
  }
  s.co_panel = s.draft_panel.with_role(Role::Co);
  for (Role r : {s.initiator, s.reviewer()}) {
    if (outcome == Outcome::ConsensusReached) {
      emit(s, r, "final.reached", {{"panel", describe_panel(*s.co_panel)}});
    } else {
      emit(s, r, "final.failed", {{"cause", cause}, {"panel", describe_panel(*s.co_panel)}});
    }
  }
}

// A PerspectiveTaking round ended without agreement.
void failed_round(ConsensusSession& s, TimestampMs now) {
  ++s.iteration;
  if (s.iteration >= s.config.max_iterations) {
    finish(s, Outcome::ConsensusFailed, "iteration limit reached", now);
  } else {
    enter_perspective_taking(s);
  }
}

}  // namespace

std::string_view to_string(Stage stage) { return kStageNames[static_cast<int>(stage)]; }

Stage parse_stage(std::string_view text) {
  for (int i = 0; i < 6; ++i) {
    if (kStageNames[i] == text) return static_cast<Stage>(i);
  }
  fail(ErrorCode::SchemaError, "unknown stage '" + std::string(text) + "'");
}

std::string_view to_string(Outcome outcome) {
  return outcome == Outcome::ConsensusReached ? "consensus_reached" : "consensus_failed";
}

Position Position::resolve(std::optional<Weight> current) const {
  if (kind_ != Kind::Keep) return *this;
  return current ? change(*current) : drop();
}

std::string Position::describe() const {
  switch (kind_) {
    case Kind::Keep: return "keep";
    case Kind::Drop: return "drop";
    case Kind::Change:
      return "change to " + std::to_string(weight_.value()) + " (" +
             std::string(weight_.label()) + ")";
  }
  return "keep";
}

json position_to_json(const Position& p) {
  switch (p.kind()) {
    case Position::Kind::Keep: return {{"kind", "keep"}};
    case Position::Kind::Drop: return {{"kind", "drop"}};
    case Position::Kind::Change: return {{"kind", "change"}, {"weight", p.weight().value()}};
  }
  return {{"kind", "keep"}};
}

Position position_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string()) {
    fail(ErrorCode::SchemaError, "position: expected {\"kind\": keep|change|drop}");
  }
  const std::string kind = doc["kind"].get<std::string>();
  if (kind == "keep") return Position::keep();
  if (kind == "drop") return Position::drop();
  if (kind == "change") {
    if (!doc.contains("weight") || !doc["weight"].is_number_integer()) {
      fail(ErrorCode::SchemaError, "position.weight: expected integer");
    }
    return Position::change(Weight::from_int(doc["weight"].get<int>()));
  }
  fail(ErrorCode::SchemaError, "position.kind: unknown '" + kind + "'");
}

const TemplateCatalog& builtin_templates() {
  static const TemplateCatalog catalog{
      {"initial_proposal.review",
       "The {initiator} proposed this preference panel: {panel}. Accept it as it is, or "
       "suggest changes."},
      {"initial_proposal.waiting",
       "Your preference panel was sent to the {reviewer} for review."},
      {"self_evaluation.ask_reason",
       "You and the {counterpart} disagree on \"{keyword}\". Your position: {own_position}. "
       "Their position: {other_position}. Why did you choose your setting?"},
      {"perspective_taking.present_reason",
       "On \"{keyword}\" the {counterpart} wants to {other_position} because: {reason}. "
       "Your position: {own_position}. Keep it, change the weight, or drop the keyword."},
      {"perspective_taking.position_update",
       "The {counterpart} now wants to {position} for \"{keyword}\"."},
      {"perspective_taking.reason_update",
       "The {counterpart} added a reason on \"{keyword}\": {reason}"},
      {"final_proposal.review", "Updated positions: {positions}. Comparing the panels."},
      {"final.reached", "Consensus reached. The co-preference panel is: {panel}."},
      {"final.failed",
       "No consensus ({cause}). The current panel becomes the co-preference panel: {panel}."},
  };
  return catalog;
}

TemplateCatalog templates_from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorCode::SchemaError, "templates: expected object");
  TemplateCatalog out;
  for (const auto& [id, text] : doc.items()) {
    if (!text.is_string()) fail(ErrorCode::SchemaError, "templates." + id + ": expected string");
    out.emplace(id, text.get<std::string>());
  }
  return out;
}

json templates_to_json(const TemplateCatalog& catalog) {
  json doc = json::object();
  for (const auto& [id, text] : catalog) doc[id] = text;
  return doc;
}

std::string render_template(const TemplateCatalog& catalog, const std::string& template_id,
                            const std::map<std::string, std::string>& payload) {
  const auto it = catalog.find(template_id);
  if (it == catalog.end()) fail(ErrorCode::InvalidArgument, "unknown template " + template_id);
  const std::string& skeleton = it->second;
  std::string out;
  std::size_t i = 0;
  while (i < skeleton.size()) {
    const auto open = skeleton.find('{', i);
    if (open == std::string::npos) break;
    const auto close = skeleton.find('}', open);
    if (close == std::string::npos) break;
    out.append(skeleton, i, open - i);
    const std::string slot = skeleton.substr(open + 1, close - open - 1);
    const auto value = payload.find(slot);
    if (value == payload.end() || value->second.empty()) {
      fail(ErrorCode::InvalidArgument, template_id + ": slot '" + slot + "' is empty");
    }
    out += value->second;
    i = close + 1;
  }
  out.append(skeleton, i);
  return out;
}

void ConsensusConfig::validate() const {
  if (max_iterations < 1) fail(ErrorCode::InvalidArgument, "consensus: max_iterations < 1");
  if (session_timeout_ms <= 0) fail(ErrorCode::InvalidArgument, "consensus: session_timeout_ms <= 0");
}

json consensus_config_to_json(const ConsensusConfig& cfg) {
  return {{"max_iterations", cfg.max_iterations}, {"session_timeout_ms", cfg.session_timeout_ms}};
}

ConsensusConfig consensus_config_from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorCode::SchemaError, "consensus: expected object");
  ConsensusConfig cfg;
  try {
    cfg.max_iterations = doc.value("max_iterations", cfg.max_iterations);
    cfg.session_timeout_ms = doc.value("session_timeout_ms", cfg.session_timeout_ms);
  } catch (const json::type_error& e) {
    fail(ErrorCode::SchemaError, std::string("consensus: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json event_to_json(const ConsensusEvent& e) {
  return {{"seq", e.seq}, {"actor", e.actor}, {"kind", e.kind}, {"payload", e.payload}, {"at", e.at}};
}

ConsensusEvent event_from_json(const json& doc) {
  try {
    return {doc.at("seq").get<std::uint64_t>(), doc.at("actor").get<std::string>(),
            doc.at("kind").get<std::string>(), doc.at("payload"), doc.at("at").get<TimestampMs>()};
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaError, std::string("event: ") + e.what());
  }
}

const Conflict* ConsensusSession::find_open(const Keyword& kw) const {
  for (const auto& c : conflicts) {
    if (c.keyword == kw && !c.resolved) return &c;
  }
  return nullptr;
}

std::vector<MediatorMessage> ConsensusSession::pending_for(Role addressee) const {
  std::vector<MediatorMessage> out;
  for (const auto& m : transcript) {
    if (m.epoch == epoch && m.addressee == addressee) out.push_back(m);
  }
  return out;
}

ConsensusSession start_session(std::string session_id, Role initiator,
                               const PreferencePanel& panel, const ConsensusConfig& cfg,
                               TimestampMs now) {
  if (initiator == Role::Co) {
    fail(ErrorCode::InvalidRole, "the initiator must be the parent or the youth");
  }
  cfg.validate();
  ConsensusSession s;
  s.session_id = std::move(session_id);
  s.initiator = initiator;
  s.config = cfg;
  s.initiator_panel = panel.with_role(initiator);
  s.draft_panel = s.initiator_panel;
  s.started_at = now;
  s.deadline = now + cfg.session_timeout_ms;
  record(s, role_name(initiator), "start",
         {{"session_id", s.session_id},
          {"initiator", role_name(initiator)},
          {"panel", panel_doc(s.initiator_panel)},
          {"config", consensus_config_to_json(cfg)}},
         now);
  enter(s, Stage::InitialProposal);
  emit(s, s.reviewer(), "initial_proposal.review",
       {{"initiator", role_name(initiator)}, {"panel", describe_panel(s.draft_panel)}});
  emit(s, initiator, "initial_proposal.waiting", {{"reviewer", role_name(s.reviewer())}});
  return s;
}

ConsensusSession reviewer_respond(const ConsensusSession& in, Role actor,
                                  const ReviewDecision& decision, TimestampMs now) {
  if (in.stage != Stage::InitialProposal) {
    fail(ErrorCode::WrongStage, "respond is only valid in initial_proposal, session is in " +
                                    std::string(to_string(in.stage)));
  }
  require_party(actor);
  if (actor != in.reviewer()) {
    fail(ErrorCode::WrongActor, "only the " + role_name(in.reviewer()) + " reviews the proposal");
  }
  ConsensusSession s = in;

  if (std::holds_alternative<Accept>(decision)) {
    record(s, role_name(actor), "respond", {{"decision", "accept"}}, now);
    finish(s, Outcome::ConsensusReached, "accepted", now);
    return s;
  }

  const auto& changes = std::get<Modify>(decision).changes;
  std::set<Keyword> seen;
  std::vector<Conflict> conflicts;
  std::size_t added = 0;
  json doc = json::array();
  for (const auto& [kw, pos] : changes) {
    if (!seen.insert(kw).second) {
      fail(ErrorCode::DuplicateKeyword, "keyword '" + kw.str() + "' modified twice");
    }
    doc.push_back({{"keyword", kw.str()}, {"position", position_to_json(pos)}});
    const auto current = s.draft_panel.weight_of(kw);
    const Position initiator_pos = current ? Position::keep() : Position::drop();
    if (pos.resolve(current) == initiator_pos.resolve(current)) continue;  // no-op edit
    if (!current) ++added;
    conflicts.push_back({kw, initiator_pos, pos, std::nullopt, std::nullopt, false});
  }
  if (conflicts.empty()) {
    fail(ErrorCode::EmptyModification, "the modification changes nothing");
  }
  if (s.draft_panel.size() + added > kMaxPanelEntries) {
    fail(ErrorCode::PanelFull, "the modification would exceed the panel size limit");
  }
  record(s, role_name(actor), "respond", {{"decision", "modify"}, {"changes", std::move(doc)}}, now);
  s.conflicts = std::move(conflicts);
  enter(s, Stage::SelfEvaluation);
  ask_reasons(s);
  return s;
}

ConsensusSession submit_reason(const ConsensusSession& in, Role actor, const Keyword& kw,
                               std::string_view reason, TimestampMs now) {
  if (in.stage != Stage::SelfEvaluation && in.stage != Stage::PerspectiveTaking) {
    fail(ErrorCode::WrongStage, "reasons are not collected in " + std::string(to_string(in.stage)));
  }
  require_party(actor);
  ConsensusSession s = in;
  Conflict* c = find_open_mut(s, kw);
  if (!c) fail(ErrorCode::NoSuchConflict, "no open conflict on '" + kw.str() + "'");

  const bool blank = reason.find_first_not_of(" \t\r\n") == std::string_view::npos;
  const std::string text = blank ? std::string(kNoReason) : std::string(reason);
  record(s, role_name(actor), "reason", {{"keyword", kw.str()}, {"reason", std::string(reason)}},
         now);
  (actor == s.initiator ? c->initiator_reason : c->reviewer_reason) = text;

  if (s.stage == Stage::PerspectiveTaking) {
    emit(s, counterpart(actor), "perspective_taking.reason_update",
         {{"counterpart", role_name(actor)}, {"keyword", kw.str()}, {"reason", text}});
    return s;
  }
  const bool complete = std::all_of(s.conflicts.begin(), s.conflicts.end(), [](const Conflict& x) {
    return x.resolved || (x.initiator_reason && x.reviewer_reason);
  });
  if (complete) enter_perspective_taking(s);
  return s;
}

ConsensusSession submit_position(const ConsensusSession& in, Role actor, const Keyword& kw,
                                 const Position& position, TimestampMs now) {
  if (in.stage != Stage::PerspectiveTaking) {
    fail(ErrorCode::WrongStage,
         "positions are only taken in perspective_taking, session is in " +
             std::string(to_string(in.stage)));
  }
  require_party(actor);
  ConsensusSession s = in;
  Conflict* c = find_open_mut(s, kw);
  if (!c) fail(ErrorCode::NoSuchConflict, "no open conflict on '" + kw.str() + "'");

  record(s, role_name(actor), "position",
         {{"keyword", kw.str()}, {"position", position_to_json(position)}}, now);
  Position& slot = actor == s.initiator ? c->initiator_position : c->reviewer_position;
  const auto current = s.draft_panel.weight_of(kw);
  if (slot.resolve(current) != position.resolve(current)) s.changed_this_round = true;
  slot = position;
  c->resolved = positions_match(s, *c);
  emit(s, counterpart(actor), "perspective_taking.position_update",
       {{"counterpart", role_name(actor)},
        {"keyword", kw.str()},
        {"position", position.describe()}});
  return s;
}

ConsensusSession advance(const ConsensusSession& in, TimestampMs now) {
  if (in.stage == Stage::Finalized) fail(ErrorCode::WrongStage, "session is already finalized");
  if (in.stage == Stage::InitialProposal && now <= in.deadline) {
    fail(ErrorCode::WrongStage, "initial_proposal ends with the reviewer's response");
  }
  ConsensusSession s = in;
  record(s, "system", "advance", json::object(), now);

  if (now > s.deadline) {
    finish(s, Outcome::ConsensusFailed, "session timed out", now);
    return s;
  }
  switch (s.stage) {
    case Stage::SelfEvaluation:
      for (auto& c : s.conflicts) {
        if (!c.initiator_reason) c.initiator_reason = std::string(kNoReason);
        if (!c.reviewer_reason) c.reviewer_reason = std::string(kNoReason);
      }
      enter_perspective_taking(s);
      break;
    case Stage::PerspectiveTaking:
      if (s.changed_this_round) {
        enter(s, Stage::FinalProposal);
        std::string positions;
        for (const auto& c : s.conflicts) {
          if (!positions.empty()) positions += "; ";
          positions += c.keyword.str() + ": " + role_name(s.initiator) + " " +
                       c.initiator_position.describe() + ", " + role_name(s.reviewer()) + " " +
                       c.reviewer_position.describe();
        }
        for (Role r : {s.initiator, s.reviewer()}) {
          emit(s, r, "final_proposal.review", {{"positions", positions}});
        }
      } else {
        failed_round(s, now);
      }
      break;
    case Stage::FinalProposal:
      if (std::all_of(s.conflicts.begin(), s.conflicts.end(),
                      [](const Conflict& c) { return c.resolved; })) {
        finish(s, Outcome::ConsensusReached, "agreed", now);
      } else {
        failed_round(s, now);
      }
      break;
    default:
      break;
  }
  return s;
}

std::pair<PreferencePanel, Outcome> finalize(const ConsensusSession& s) {
  if (s.stage != Stage::Finalized || !s.outcome || !s.co_panel) {
    fail(ErrorCode::NotFinalized, "session " + s.session_id + " is still in " +
                                      std::string(to_string(s.stage)));
  }
  return {*s.co_panel, *s.outcome};
}

ConsensusSession apply_event(const ConsensusSession& s, const ConsensusEvent& e) {
  try {
    const json& p = e.payload;
    if (e.kind == "start") {
      return start_session(p.at("session_id").get<std::string>(),
                           parse_role(p.at("initiator").get<std::string>()),
                           panel_from_json(p.at("panel")),
                           consensus_config_from_json(p.at("config")), e.at);
    }
    if (e.kind == "respond") {
      const Role actor = parse_role(e.actor);
      if (p.at("decision") == "accept") return reviewer_respond(s, actor, Accept{}, e.at);
      Modify m;
      for (const auto& c : p.at("changes")) {
        m.changes.emplace_back(Keyword::normalize(c.at("keyword").get<std::string>()),
                               position_from_json(c.at("position")));
      }
      return reviewer_respond(s, actor, m, e.at);
    }
    if (e.kind == "reason") {
      return submit_reason(s, parse_role(e.actor),
                           Keyword::normalize(p.at("keyword").get<std::string>()),
                           p.at("reason").get<std::string>(), e.at);
    }
    if (e.kind == "position") {
      return submit_position(s, parse_role(e.actor),
                             Keyword::normalize(p.at("keyword").get<std::string>()),
                             position_from_json(p.at("position")), e.at);
    }
    if (e.kind == "advance") return advance(s, e.at);
  } catch (const json::exception& ex) {
    fail(ErrorCode::SchemaError, "event " + std::to_string(e.seq) + ": " + ex.what());
  }
  fail(ErrorCode::SchemaError, "unknown consensus event kind '" + e.kind + "'");
}

ConsensusSession replay(const std::vector<ConsensusEvent>& events) {
  if (events.empty() || events.front().kind != "start") {
    fail(ErrorCode::SchemaError, "replay: the log must begin with a start event");
  }
  ConsensusSession s;
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (i > 0 && events[i].kind == "start") fail(ErrorCode::SchemaError, "replay: second start event");
    s = apply_event(s, events[i]);
  }
  return s;
}

namespace {

json message_to_json(const MediatorMessage& m) {
  return {{"stage", to_string(m.stage)},
          {"addressee", to_string(m.addressee)},
          {"template_id", m.template_id},
          {"payload", m.payload},
          {"text", m.text},
          {"epoch", m.epoch}};
}

json optional_text(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

}  // namespace

json session_to_json(const ConsensusSession& s) {
  json conflicts = json::array();
  for (const auto& c : s.conflicts) {
    conflicts.push_back({{"keyword", c.keyword.str()},
                         {"initiator_position", position_to_json(c.initiator_position)},
                         {"reviewer_position", position_to_json(c.reviewer_position)},
                         {"initiator_reason", optional_text(c.initiator_reason)},
                         {"reviewer_reason", optional_text(c.reviewer_reason)},
                         {"resolved", c.resolved}});
  }
  json transcript = json::array();
  for (const auto& m : s.transcript) transcript.push_back(message_to_json(m));
  json pending = json::object();
  for (Role r : {Role::Parent, Role::Youth}) {
    json list = json::array();
    for (const auto& m : s.pending_for(r)) list.push_back(message_to_json(m));
    pending[role_name(r)] = std::move(list);
  }
  return {{"session_id", s.session_id},
          {"initiator", role_name(s.initiator)},
          {"reviewer", role_name(s.reviewer())},
          {"config", consensus_config_to_json(s.config)},
          {"stage", to_string(s.stage)},
          {"iteration", s.iteration},
          {"epoch", s.epoch},
          {"changed_this_round", s.changed_this_round},
          {"outcome", s.outcome ? json(to_string(*s.outcome)) : json(nullptr)},
          {"started_at", s.started_at},
          {"deadline", s.deadline},
          {"initiator_panel", panel_doc(s.initiator_panel)},
          {"draft_panel", panel_doc(s.draft_panel)},
          {"co_panel", s.co_panel ? panel_doc(*s.co_panel) : json(nullptr)},
          {"conflicts", std::move(conflicts)},
          {"transcript", std::move(transcript)},
          {"pending", std::move(pending)}};
}

json session_export(const ConsensusSession& s) {
  json events = json::array();
  for (const auto& e : s.events) events.push_back(event_to_json(e));
  return {{"session_id", s.session_id}, {"events", std::move(events)}};
}

ConsensusSession session_import(const json& doc) {
  if (!doc.is_object() || !doc.contains("events") || !doc["events"].is_array()) {
    fail(ErrorCode::SchemaError, "session export: expected {\"events\": [...]}");
  }
  std::vector<ConsensusEvent> events;
  for (const auto& e : doc["events"]) events.push_back(event_from_json(e));
  return replay(events);
}

}  // namespace copref
