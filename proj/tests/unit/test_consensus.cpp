#include <doctest.h>

#include "copref/consensus.hpp"
#include "copref/error.hpp"
#include "copref/ingest.hpp"
#include "support/consensus_fuzz.hpp"

using namespace copref;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

Keyword kw(const char* s) { return Keyword::normalize(s); }

PreferencePanel panel(Role role, std::initializer_list<std::pair<const char*, int>> items) {
  PreferencePanel::Entries e;
  for (const auto& [k, v] : items) e.emplace(kw(k), Weight::from_int(v));
  return PreferencePanel(role, e);
}

Modify modify(std::initializer_list<std::pair<const char*, Position>> items) {
  Modify m;
  for (const auto& [k, p] : items) m.changes.emplace_back(kw(k), p);
  return m;
}

Position change(int w) { return Position::change(Weight::from_int(w)); }

// Youth proposes {"anime": 2}; parent wants anime at 0.
ConsensusSession anime_conflict(ConsensusConfig cfg = {}) {
  auto s = start_session("s1", Role::Youth, panel(Role::Youth, {{"anime", 2}}), cfg, 0);
  return reviewer_respond(s, Role::Parent, modify({{"anime", change(0)}}), 10);
}

}  // namespace

TEST_CASE("start_session") {
  auto s = start_session("s1", Role::Youth, panel(Role::Youth, {{"anime", 2}}), {}, 100);
  CHECK(s.stage == Stage::InitialProposal);
  CHECK(s.draft_panel.entries() == panel(Role::Youth, {{"anime", 2}}).entries());
  CHECK(s.deadline == 100 + 600'000);
  const auto to_parent = s.pending_for(Role::Parent);
  REQUIRE(to_parent.size() == 1);
  CHECK(to_parent[0].template_id == "initial_proposal.review");
  CHECK(to_parent[0].text.find("anime 2 (strongly like)") != std::string::npos);

  s = start_session("s2", Role::Parent, PreferencePanel(Role::Parent), {}, 0);
  CHECK(s.draft_panel.empty());
  CHECK(s.stage == Stage::InitialProposal);

  CHECK(code_of([] { start_session("x", Role::Co, PreferencePanel(Role::Co), {}, 0); }) ==
        ErrorCode::InvalidRole);
  CHECK(code_of([] {
          start_session("x", Role::Parent, PreferencePanel(Role::Parent), {0, 1}, 0);
        }) == ErrorCode::InvalidArgument);
}

TEST_CASE("accept path") {
  auto s = start_session("s1", Role::Youth, panel(Role::Youth, {{"anime", 2}}), {}, 0);
  CHECK(code_of([&] { reviewer_respond(s, Role::Youth, Accept{}, 1); }) == ErrorCode::WrongActor);
  s = reviewer_respond(s, Role::Parent, Accept{}, 1);
  CHECK(s.stage == Stage::Finalized);
  const auto [co, outcome] = finalize(s);
  CHECK(outcome == Outcome::ConsensusReached);
  CHECK(co.role() == Role::Co);
  CHECK(co.entries() == panel(Role::Co, {{"anime", 2}}).entries());
  CHECK(finalize(s) == finalize(s));
  CHECK(code_of([&] { reviewer_respond(s, Role::Parent, Accept{}, 2); }) == ErrorCode::WrongStage);
  CHECK(code_of([&] { advance(s, 2); }) == ErrorCode::WrongStage);
}

TEST_CASE("modify creates conflicts") {
  auto s = anime_conflict();
  CHECK(s.stage == Stage::SelfEvaluation);
  REQUIRE(s.conflicts.size() == 1);
  CHECK(s.conflicts[0].initiator_position == Position::keep());
  CHECK(s.conflicts[0].reviewer_position == change(0));
  CHECK(s.pending_for(Role::Parent).size() == 1);
  CHECK(s.pending_for(Role::Youth).size() == 1);
  CHECK(s.pending_for(Role::Youth)[0].template_id == "self_evaluation.ask_reason");
  CHECK(code_of([&] { reviewer_respond(s, Role::Parent, Accept{}, 20); }) ==
        ErrorCode::WrongStage);

  auto fresh = start_session("s1", Role::Youth, panel(Role::Youth, {{"anime", 2}}), {}, 0);
  CHECK(code_of([&] { reviewer_respond(fresh, Role::Parent, Modify{}, 1); }) ==
        ErrorCode::EmptyModification);
  // Keep and Change(current) are no-ops.
  CHECK(code_of([&] {
          reviewer_respond(fresh, Role::Parent,
                           modify({{"anime", Position::keep()}, {"x", Position::drop()}}), 1);
        }) == ErrorCode::EmptyModification);
  CHECK(code_of([&] {
          reviewer_respond(fresh, Role::Parent, modify({{"anime", change(2)}}), 1);
        }) == ErrorCode::EmptyModification);
  CHECK(code_of([&] {
          reviewer_respond(fresh, Role::Parent, modify({{"anime", change(1)}, {"anime", change(0)}}),
                           1);
        }) == ErrorCode::DuplicateKeyword);

  // New keyword: the initiator's side is Drop. The no-op edit is skipped.
  s = reviewer_respond(fresh, Role::Parent,
                       modify({{"science", change(2)}, {"anime", Position::keep()}}), 1);
  REQUIRE(s.conflicts.size() == 1);
  CHECK(s.conflicts[0].keyword == kw("science"));
  CHECK(s.conflicts[0].initiator_position == Position::drop());
}

TEST_CASE("reasons move the session to perspective taking") {
  auto s = anime_conflict();
  CHECK(code_of([&] { submit_reason(s, Role::Parent, kw("music"), "x", 20); }) ==
        ErrorCode::NoSuchConflict);
  s = submit_reason(s, Role::Youth, kw("anime"), "I love it", 20);
  CHECK(s.stage == Stage::SelfEvaluation);
  s = submit_reason(s, Role::Parent, kw("anime"), "   ", 30);
  CHECK(s.stage == Stage::PerspectiveTaking);
  CHECK(s.conflicts[0].reviewer_reason == std::string(kNoReason));
  CHECK(s.conflicts[0].initiator_reason == std::string("I love it"));

  const auto to_parent = s.pending_for(Role::Parent);
  REQUIRE(to_parent.size() == 1);
  CHECK(to_parent[0].template_id == "perspective_taking.present_reason");
  CHECK(to_parent[0].payload.at("reason") == "I love it");
  CHECK(s.pending_for(Role::Youth)[0].payload.at("reason") == kNoReason);

  auto pre = start_session("s", Role::Parent, PreferencePanel(Role::Parent), {}, 0);
  CHECK(code_of([&] { submit_reason(pre, Role::Parent, kw("a"), "x", 1); }) ==
        ErrorCode::WrongStage);
}

TEST_CASE("advance in self evaluation fills missing reasons") {
  auto s = submit_reason(anime_conflict(), Role::Youth, kw("anime"), "fun", 20);
  s = advance(s, 30);
  CHECK(s.stage == Stage::PerspectiveTaking);
  CHECK(s.conflicts[0].reviewer_reason == std::string(kNoReason));
}

TEST_CASE("positions resolve conflicts and reach consensus") {
  auto s = anime_conflict();
  CHECK(code_of([&] { submit_position(s, Role::Youth, kw("anime"), change(0), 20); }) ==
        ErrorCode::WrongStage);
  s = advance(s, 20);
  s = submit_position(s, Role::Youth, kw("anime"), change(0), 30);
  CHECK(s.conflicts[0].resolved);
  CHECK(s.changed_this_round);
  CHECK(code_of([&] { submit_position(s, Role::Parent, kw("anime"), change(1), 31); }) ==
        ErrorCode::NoSuchConflict);
  s = advance(s, 40);
  CHECK(s.stage == Stage::FinalProposal);
  CHECK(code_of([&] { finalize(s); }) == ErrorCode::NotFinalized);
  s = advance(s, 50);
  const auto [co, outcome] = finalize(s);
  CHECK(outcome == Outcome::ConsensusReached);
  CHECK(co.entries() == panel(Role::Co, {{"anime", 0}}).entries());
}

TEST_CASE("both parties moving to the same weight resolves") {
  auto s = advance(anime_conflict(), 20);
  s = submit_position(s, Role::Youth, kw("anime"), change(1), 30);
  CHECK(!s.conflicts[0].resolved);
  s = submit_position(s, Role::Parent, kw("anime"), change(1), 31);
  CHECK(s.conflicts[0].resolved);
  s = advance(advance(s, 40), 50);
  CHECK(finalize(s).first.weight_of(kw("anime"))->value() == 1);
}

TEST_CASE("drop resolution removes the keyword") {
  auto s = start_session("s", Role::Parent, panel(Role::Parent, {{"games", -1}, {"music", 1}}),
                         {}, 0);
  s = reviewer_respond(s, Role::Youth, modify({{"games", Position::drop()}}), 1);
  s = advance(s, 2);
  s = submit_position(s, Role::Parent, kw("games"), Position::drop(), 3);
  s = advance(advance(s, 4), 5);
  CHECK(finalize(s).first.entries() == panel(Role::Co, {{"music", 1}}).entries());
}

TEST_CASE("no change for max_iterations rounds fails with the draft") {
  auto s = advance(anime_conflict(), 20);
  for (int i = 1; i < 3; ++i) {
    s = advance(s, 20 + i);
    CHECK(s.stage == Stage::PerspectiveTaking);
    CHECK(s.iteration == i);
    CHECK(s.pending_for(Role::Parent).size() == 1);  // reasons presented again
  }
  s = advance(s, 30);
  CHECK(s.iteration == 3);
  const auto [co, outcome] = finalize(s);
  CHECK(outcome == Outcome::ConsensusFailed);
  CHECK(co.entries() == panel(Role::Co, {{"anime", 2}}).entries());
}

TEST_CASE("unresolved final proposal loops back and counts") {
  auto s = advance(anime_conflict({1, 600'000}), 20);
  s = submit_position(s, Role::Youth, kw("anime"), change(1), 21);
  s = advance(s, 22);
  CHECK(s.stage == Stage::FinalProposal);
  s = advance(s, 23);
  CHECK(s.stage == Stage::Finalized);
  CHECK(s.outcome == Outcome::ConsensusFailed);
  CHECK(s.iteration == 1);

  s = advance(anime_conflict(), 20);
  s = submit_position(s, Role::Youth, kw("anime"), change(1), 21);
  s = advance(advance(s, 22), 23);
  CHECK(s.stage == Stage::PerspectiveTaking);
  CHECK(s.iteration == 1);
}

TEST_CASE("advance after the deadline fails the session") {
  auto s = anime_conflict({3, 1000});
  s = advance(s, 1001);
  CHECK(finalize(s).second == Outcome::ConsensusFailed);
  CHECK(finalize(s).first.entries() == panel(Role::Co, {{"anime", 2}}).entries());

  auto fresh = start_session("s", Role::Parent, PreferencePanel(Role::Parent), {3, 1000}, 0);
  CHECK(code_of([&] { advance(fresh, 500); }) == ErrorCode::WrongStage);
  CHECK(advance(fresh, 1001).outcome == Outcome::ConsensusFailed);
}

TEST_CASE("template catalog file matches the built-in copy") {
  const auto doc = json::parse(
      read_text_file(std::string(COPREF_SOURCE_DIR) + "/templates/mediator.json", "templates"));
  CHECK(templates_from_json(doc) == builtin_templates());
  CHECK(render_template(builtin_templates(), "final.reached", {{"panel", "x"}}) ==
        "Consensus reached. The co-preference panel is: x.");
  CHECK(code_of([] { render_template(builtin_templates(), "final.reached", {}); }) ==
        ErrorCode::InvalidArgument);
  CHECK(code_of([] { render_template(builtin_templates(), "nope", {}); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("replay reproduces the session") {
  auto s = submit_reason(anime_conflict(), Role::Youth, kw("anime"), "fun", 20);
  s = advance(s, 30);
  s = submit_position(s, Role::Parent, kw("anime"), change(2), 40);
  s = advance(advance(s, 50), 60);
  CHECK(replay(s.events) == s);
  CHECK(session_import(session_export(s)) == s);
  CHECK(code_of([] { replay({}); }) == ErrorCode::SchemaError);
}

TEST_CASE("fuzzed operation sequences") {
  int accepted = 0, reached_with_conflicts = 0, failed = 0, multi_round = 0;
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const auto rep = testing::fuzz_session(seed);
    INFO("seed " << seed << ": " << rep.problem);
    CHECK(rep.ok());
    accepted += rep.accepted;
    reached_with_conflicts += rep.outcome == Outcome::ConsensusReached && rep.conflicts > 0;
    failed += rep.outcome == Outcome::ConsensusFailed;
    multi_round += rep.iteration > 1;
  }
  // every path is exercised
  CHECK(accepted > 100);
  CHECK(reached_with_conflicts > 20);
  CHECK(failed > 100);
  CHECK(multi_round > 20);
  MESSAGE("accepted " << accepted << ", reached after conflicts " << reached_with_conflicts
                      << ", failed " << failed << ", multi-round " << multi_round);
}

TEST_CASE("simulate examples") {
  SimulationConfig cfg;
  cfg.sessions = 50;
  cfg.seed = 7;
  const auto all = simulate({0.0, 1.0}, {0.0, 1.0}, cfg);
  CHECK(all.consensus_rate == 1.0);
  CHECK(all.mean_cross_party_exchanges > 0);

  const auto none = simulate({0.0, 0.0}, {0.0, 0.0}, cfg);
  CHECK(none.consensus_rate == 0.0);
  CHECK(none.failed == 50);

  cfg.sessions = 1;
  const auto one = simulate({1.0, 0.0}, {1.0, 0.0}, cfg);
  CHECK(one.sessions == 1);
  CHECK(one.consensus_rate == 1.0);
  CHECK(one.mean_cross_party_exchanges == 0.0);

  cfg.sessions = 200;
  CHECK(simulate({0.3, 0.5}, {0.3, 0.5}, cfg) == simulate({0.3, 0.5}, {0.3, 0.5}, cfg));
  CHECK(format_stats(simulate({0.3, 0.5}, {0.3, 0.5}, cfg)) ==
        format_stats(simulate({0.3, 0.5}, {0.3, 0.5}, cfg)));
}
