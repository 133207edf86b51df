#include <doctest.h>

#include <random>

#include "copref/error.hpp"
#include "copref/guidelines.hpp"
#include "copref/ingest.hpp"
#include "support/guideline_gen.hpp"

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

std::string error_text(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

const char* kMinimal = R"({
  "age_bands": [{"name": "all", "min_age": 0, "max_age": null}],
  "risks": [{"name": "violence", "levels": ["none", "some"], "description": "d"}],
  "appropriateness": [{"name": "educational value", "scale": {"no": 0, "yes": 3}}],
  "source_notes": "test"
})";

PreferencePanel co(std::initializer_list<std::pair<const char*, int>> items) {
  PreferencePanel::Entries e;
  for (const auto& [k, v] : items) e.emplace(Keyword::normalize(k), Weight::from_int(v));
  return PreferencePanel(Role::Co, e);
}

}  // namespace

TEST_CASE("load_common minimal document") {
  const auto set = load_common(kMinimal);
  REQUIRE(set.age_bands.size() == 1);
  CHECK(set.age_bands[0].name == "all");
  CHECK(!set.age_bands[0].max_age);
  REQUIRE(set.risks.size() == 1);
  CHECK(set.risks[0].levels == std::vector<std::string>{"none", "some"});
  CHECK(set.risks[0].rank_of("some") == 1);
  CHECK(!set.risks[0].rank_of("high"));
  CHECK(set.appropriateness[0].has_value(3));
  CHECK(!set.appropriateness[0].has_value(2));
  CHECK(set.source_notes == "test");
}

TEST_CASE("load_common defaults and errors") {
  auto doc = json::parse(kMinimal);
  doc["risks"][0].erase("levels");
  doc["appropriateness"][0].erase("scale");
  const auto set = load_common_json(doc);
  CHECK(set.risks[0].levels == std::vector<std::string>{"none", "low", "medium", "high"});
  CHECK(set.appropriateness[0].scale == default_appropriateness_scale());

  auto overlap = json::parse(kMinimal);
  overlap["age_bands"] = json::parse(
      R"([{"name":"a","min_age":0,"max_age":7},{"name":"b","min_age":6,"max_age":12},
          {"name":"c","min_age":13,"max_age":null}])");
  CHECK(code_of([&] { load_common_json(overlap); }) == ErrorCode::OverlapError);

  auto gap = json::parse(kMinimal);
  gap["age_bands"] = json::parse(
      R"([{"name":"a","min_age":0,"max_age":7},{"name":"b","min_age":9,"max_age":null}])");
  CHECK(code_of([&] { load_common_json(gap); }) == ErrorCode::SchemaError);

  auto missing = json::parse(kMinimal);
  missing.erase("risks");
  CHECK(error_text([&] { load_common_json(missing); }).find("risks") != std::string::npos);

  auto bad_level = json::parse(kMinimal);
  bad_level["risks"][0]["levels"] = json::array({"none", "none"});
  CHECK(error_text([&] { load_common_json(bad_level); }).find("risks[0].levels") !=
        std::string::npos);

  auto bad_scale = json::parse(kMinimal);
  bad_scale["appropriateness"][0]["scale"]["huge"] = 9;
  CHECK(error_text([&] { load_common_json(bad_scale); }).find("appropriateness[0].scale.huge") !=
        std::string::npos);

  auto unknown = json::parse(kMinimal);
  unknown["extra"] = 1;
  CHECK(code_of([&] { load_common_json(unknown); }) == ErrorCode::SchemaError);

  CHECK(code_of([] { load_common(std::string_view("{nope")); }) == ErrorCode::SchemaError);
}

TEST_CASE("shipped default guidelines") {
  const auto set = load_common(
      read_text_file(std::string(COPREF_SOURCE_DIR) + "/guidelines/default.json", "guidelines"));
  REQUIRE(set.age_bands.size() == 4);
  CHECK(set.age_bands[0].name == "0-7");
  CHECK(set.age_bands[3].name == "16+");
  CHECK(set.find_risk("violence"));
  CHECK(set.find_risk("pornography"));
  CHECK(set.find_risk("negative themes"));
  CHECK(set.find_appropriateness("educational value"));
  CHECK(set.source_notes.find("Editorial") != std::string::npos);
}

TEST_CASE("load_common round-trips random valid sets") {
  std::mt19937_64 rng(41);
  for (int i = 0; i < 100; ++i) {
    const auto set = testing::random_guideline_set(rng);
    CHECK(load_common_json(serialize_common(set)) == set);
    CHECK(load_common(std::string_view(serialize_common(set).dump())) == set);
  }
}

TEST_CASE("overlapping age bands are always rejected") {
  std::mt19937_64 rng(43);
  for (int i = 0; i < 100; ++i) {
    const auto bad = testing::with_overlapping_bands(rng, testing::random_guideline_set(rng));
    CHECK(code_of([&] { load_common_json(serialize_common(bad)); }) == ErrorCode::OverlapError);
  }
}

TEST_CASE("derive_personalized") {
  auto g = derive_personalized(co({{"violence", -2}}));
  REQUIRE(g.emphasis.size() == 1);
  CHECK(g.emphasis[0].directive == Directive::Avoid);

  g = derive_personalized(co({{"science", 2}}));
  CHECK(g.emphasis[0].directive == Directive::Seek);

  CHECK(derive_personalized(co({})).emphasis.empty());
  CHECK(derive_personalized(co({{"music", 0}})).emphasis[0].directive == Directive::Note);

  CHECK(code_of([] { derive_personalized(PreferencePanel(Role::Parent)); }) ==
        ErrorCode::WrongRole);
}

TEST_CASE("derive_personalized partitions by sign") {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 100; ++t) {
    PreferencePanel p(Role::Co);
    for (int i = 0; i < 10; ++i) {
      if (rng() % 2) {
        p = set_preference(p, Keyword::normalize("k" + std::to_string(i)),
                           Weight::from_int(static_cast<int>(rng() % 5) - 2));
      }
    }
    const auto g = derive_personalized(p);
    CHECK(g.emphasis.size() == p.size());
    for (const auto& e : g.emphasis) {
      const int w = p.weight_of(e.keyword)->value();
      CHECK((e.directive == Directive::Avoid) == (w < 0));
      CHECK((e.directive == Directive::Seek) == (w > 0));
      CHECK((e.directive == Directive::Note) == (w == 0));
    }
  }
}

TEST_CASE("render_prompt_context") {
  const auto common = load_common(kMinimal);
  const auto empty = derive_personalized(co({}));
  const std::string a = render_prompt_context(common, empty);
  CHECK(a == render_prompt_context(common, empty));
  CHECK(a.find("## Personalized guidelines\nnone configured") != std::string::npos);
  CHECK(a.find("- violence (levels: none < some): d") != std::string::npos);
  CHECK(a.find("- educational value (scale: no=0, yes=3)") != std::string::npos);

  const auto text = render_prompt_context(
      common, derive_personalized(co({{"gore", -2}, {"science", 2}})));
  const auto avoid = text.find("### Avoid\n");
  const auto note = text.find("### Note\n");
  REQUIRE(avoid != std::string::npos);
  REQUIRE(note != std::string::npos);
  const std::string avoid_list = text.substr(avoid, note - avoid);
  CHECK(avoid_list == "### Avoid\n- gore (weight -2, strongly dislike)\n");
  CHECK(text.find("### Seek\n- science (weight 2, strongly like)\n") != std::string::npos);
}
