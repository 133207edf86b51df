// One PASS/FAIL line per primary acceptance criterion.
//   acceptance <path-to-copref-cli>

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "support/consensus_fuzz.hpp"
#include "support/feedback_gen.hpp"
#include "support/guideline_gen.hpp"
#include "support/ingest_gen.hpp"
#include "support/provider_gen.hpp"
#include "support/service_harness.hpp"

using namespace copref;

namespace {

// Runtime limits, in seconds.
constexpr double kConsensusLimit = 30.0;
constexpr double kIngestLimit = 10.0;
constexpr double kFeedbackLimit = 5.0;
// Tolerance for aggregate means against the recomputation.
constexpr double kMeanTolerance = 1e-9;
constexpr double kCutThreshold = 0.85;

std::string g_cli;
const std::filesystem::path g_source = COPREF_SOURCE_DIR;

struct Verdict {
  bool pass = true;
  std::string detail;
};

struct CommandResult {
  int exit_code = -1;
  std::string out;
};

std::string quote(const std::string& s) { return "'" + s + "'"; }

CommandResult run(const std::string& args) {
  const std::string cmd = quote(g_cli) + " " + args + " 2>/dev/null";
  CommandResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

Verdict consensus_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  int bad = 0;
  std::string first;
  for (std::uint64_t seed = 0; seed < 10'000; ++seed) {
    const auto rep = testing::fuzz_session(seed);
    if (!rep.ok()) {
      if (bad++ == 0) first = "seed " + std::to_string(seed) + ": " + rep.problem;
    }
  }
  const double dt = seconds_since(t0);
  Verdict v{bad == 0 && dt < kConsensusLimit,
            "10000 sequences, " + std::to_string(bad) + " violations (replay included), " + fmt(dt) + "s (limit " +
                fmt(kConsensusLimit) + "s)"};
  if (!first.empty()) v.detail += "; first: " + first;
  return v;
}

double rate_of(const std::string& out) {
  const auto pos = out.find("consensus_rate: ");
  return pos == std::string::npos ? -1 : std::stod(out.substr(pos + 16));
}

Verdict simulation_harness() {
  const auto a = run("consensus-sim --sessions 200 --seed 7");
  const auto b = run("consensus-sim --sessions 200 --seed 7");
  const auto all = run("consensus-sim --sessions 200 --seed 7 --compromise-prob 1");
  const auto none = run("consensus-sim --sessions 200 --seed 7 --compromise-prob 0 --accept-prob 0");
  const bool reproducible = a.exit_code == 0 && !a.out.empty() && a.out == b.out;
  const bool stats = a.out.find("mean_one_party_turns: ") != std::string::npos &&
                     a.out.find("mean_cross_party_exchanges: ") != std::string::npos;
  const bool one = all.out.find("consensus_rate: 1.000\n") != std::string::npos;
  const bool zero = none.out.find("consensus_rate: 0.000\n") != std::string::npos;
  return {reproducible && stats && one && zero,
          std::string("reproducible=") + (reproducible ? "yes" : "no") + ", compromise 1 -> " +
              fmt(rate_of(all.out)) + ", compromise 0/accept 0 -> " + fmt(rate_of(none.out)) +
              ", turn stats " + (stats ? "present" : "missing")};
}

Verdict ingest_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2718);
  const auto seq = testing::planted_cut_sequence(rng);
  IngestConfig cfg;
  cfg.similarity_threshold = kCutThreshold;
  std::vector<std::int64_t> got;
  for (const auto& k : extract_keyframes(seq.frames, cfg)) got.push_back(k.frame.index);
  const bool cuts = got == seq.keyframe_indices && got.size() == 6;
  int align_bad = 0, chunk_bad = 0;
  for (std::uint64_t s = 0; s < 50; ++s) align_bad += !testing::align_roundtrip_holds(1000 + s);
  for (std::uint64_t s = 0; s < 100; ++s) chunk_bad += !testing::chunk_flatten_holds(2000 + s);
  const double dt = seconds_since(t0);
  return {cuts && align_bad == 0 && chunk_bad == 0 && dt < kIngestLimit,
          "keyframes " + std::string(cuts ? "at planted indices" : "WRONG") + " (" +
              std::to_string(got.size()) + "), align failures " + std::to_string(align_bad) +
              "/50, chunk failures " + std::to_string(chunk_bad) + "/100, " + fmt(dt) + "s (limit " +
              fmt(kIngestLimit) + "s)"};
}

Verdict feedback_math() {
  const auto t0 = std::chrono::steady_clock::now();
  int mismatches = 0;
  for (int w = -2; w <= 2; ++w) {
    for (int s = -2; s <= 2; ++s) {
      mismatches += classify(Weight::from_int(w), Presence::from_int(s)) != testing::oracle_classify(w, s);
    }
  }
  const bool music = classify(Weight::from_int(1), Presence::from_int(1)) == Alignment::Aligned;
  const bool games = classify(Weight::from_int(-2), Presence::from_int(2)) == Alignment::Misaligned;
  std::mt19937_64 rng(314);
  const TimestampMs from = 1'700'000'000'000;
  int bad_sets = 0;
  std::string first;
  for (int t = 0; t < 1000; ++t) {
    const auto recs = testing::random_records(rng, from - kMillisPerDay, 9 * kMillisPerDay);
    const Period period{from, from + 7 * kMillisPerDay, kMillisPerDay};
    std::string problem;
    if (!testing::aggregate_matches_oracle(recs, period, aggregate(recs, period), &problem, kMeanTolerance)) {
      if (bad_sets++ == 0) first = problem;
    }
  }
  const double dt = seconds_since(t0);
  return {mismatches == 0 && music && games && bad_sets == 0 && dt < kFeedbackLimit,
          std::to_string(25 - mismatches) + "/25 pairs match, music(1,1) " + (music ? "aligned" : "WRONG") +
              ", games(-2,2) " + (games ? "misaligned" : "WRONG") + ", " + std::to_string(1000 - bad_sets) +
              "/1000 record sets within tolerance" + (first.empty() ? "" : " (" + first + ")") + ", " + fmt(dt) +
              "s (limit " + fmt(kFeedbackLimit) + "s)"};
}

Verdict end_to_end() {
  const auto bundle = g_source / "tests" / "fixtures" / "bundle";
  const auto golden = slurp(g_source / "tests" / "fixtures" / "golden" / "censor_mock.json");
  testing::TempDir dir;
  std::vector<std::string> outputs;
  bool exits_ok = true;
  for (int i = 0; i < 3; ++i) {
    const auto out = dir.path() / ("run" + std::to_string(i) + ".json");
    const auto r = run("censor --frames " + quote((bundle / "frames").string()) + " --subs " +
                       quote((bundle / "subs.srt").string()) + " --panel " +
                       quote((bundle / "co_panel.json").string()) + " --guidelines " +
                       quote((g_source / "guidelines" / "default.json").string()) +
                       " --provider mock --lexicon " + quote((bundle / "lexicon.json").string()) +
                       " --video-id fixture-clip --out " + quote(out.string()));
    exits_ok = exits_ok && r.exit_code == 0;
    outputs.push_back(slurp(out));
  }
  const bool identical = outputs[0] == outputs[1] && outputs[1] == outputs[2];
  const bool matches = !golden.empty() && outputs[0] == golden;
  // The golden's feedback must itself obey the classification rule.
  bool rule = false;
  try {
    const auto fb = json::parse(golden).at("feedback");
    rule = !fb.at("entries").empty();
    for (const auto& e : fb.at("entries")) {
      const auto expected = testing::oracle_classify(e.at("pref_weight"), e.at("video_score"));
      rule = rule && e.at("classification") == to_string(expected);
    }
  } catch (const std::exception&) {
    rule = false;
  }
  return {exits_ok && identical && matches && rule,
          std::string("3 runs ") + (identical ? "byte-identical" : "DIFFER") + ", golden " +
              (matches ? "matches" : "DIFFERS") + ", golden classifications " + (rule ? "consistent" : "WRONG")};
}

Verdict combine() {
  std::mt19937_64 rng(4242);
  int not_invariant = 0, off_oracle = 0;
  for (int t = 0; t < 500; ++t) {
    const auto parts = testing::random_partials(rng);
    const auto base = combine_chunks(parts);
    auto shuffled = parts;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    not_invariant += !(combine_chunks(shuffled) == base);
    off_oracle += !testing::combine_matches_oracle(parts, base);
  }
  auto single = [](const char* kw, int p) {
    VideoFeatures f;
    f.scores.emplace(Keyword::normalize(kw), Presence::from_int(p));
    return f;
  };
  const std::vector<FeaturePartial> equal{{single("music", 2), 1000}, {single("music", 0), 1000}};
  const std::vector<FeaturePartial> weighted{{single("games", 2), 3000}, {single("games", -2), 1000}};
  const bool ex1 = combine_chunks(equal).scores.at(Keyword::normalize("music")).value() == 1;
  const bool ex2 = combine_chunks(weighted).scores.at(Keyword::normalize("games")).value() == 1;
  return {not_invariant == 0 && off_oracle == 0 && ex1 && ex2,
          std::to_string(500 - not_invariant) + "/500 permutation-invariant, " + std::to_string(500 - off_oracle) +
              "/500 match the oracle, equal-duration example " + (ex1 ? "= 1" : "WRONG") +
              ", 3:1 example " + (ex2 ? "= 1" : "WRONG")};
}

Verdict service_contracts() {
  std::ostringstream detail;
  bool pass = true;

  testing::TempDir dir;
  std::vector<std::string> paths;
  std::vector<testing::HttpResult> before;
  std::string token;
  {
    testing::ServiceHarness h(dir.path());
    // Expiry with a mocked clock.
    std::mt19937_64 rng(99);
    int expired = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const auto created = h.call("POST", "/pairs");
      const TimestampMs t0 = created.body.at("created_at");
      h.now = t0 + created.body.at("ttl_ms").get<TimestampMs>() + 1 +
              static_cast<TimestampMs>(rng() % kMillisPerDay);
      const auto r = h.call("POST", "/pairs/" + created.body.at("code").get<std::string>() + "/join",
                            {{"role", rng() % 2 ? "parent" : "youth"}, {"account", "a"}});
      expired += r.status == 409 && r.body.at("error") == "CodeExpired";
      h.now = t0;
    }
    pass = pass && expired == 100;
    detail << "expired joins rejected " << expired << "/100";

    // Single use.
    const auto p = h.make_pair();
    const auto reuse = h.call("POST", "/pairs/" + p.code + "/join", {{"role", "youth"}, {"account", "b"}});
    const bool single_use = reuse.status == 409 && reuse.body.at("error") == "CodeUsed";
    pass = pass && single_use;
    detail << ", reuse " << (single_use ? "rejected" : "ACCEPTED");

    // Stage guard.
    h.call("PUT", "/pairs/" + p.pair_id + "/panels/parent", {{"entries", {{"games", -2}}}}, p.parent_token);
    const auto s = h.call("POST", "/pairs/" + p.pair_id + "/consensus", json::object(), p.parent_token);
    const std::string sid = s.body.value("session_id", "");
    const auto first = h.call("POST", "/consensus/" + sid + "/respond", {{"decision", "accept"}}, p.youth_token);
    const auto second = h.call("POST", "/consensus/" + sid + "/respond", {{"decision", "accept"}}, p.youth_token);
    const bool guard = first.status == 200 && second.status == 409;
    pass = pass && guard;
    detail << ", second respond " << second.status;

    // Privacy over fuzzed sessions.
    std::set<std::string> markers;
    std::vector<testing::ServiceHarness::Pair> pairs{p};
    for (int i = 0; i < 3; ++i) pairs.push_back(h.make_pair());
    for (int i = 0; i < 200; ++i) testing::fuzz_http_session(h, pairs[i % pairs.size()], rng, markers);
    std::size_t leaks = 0;
    for (const auto& pr : pairs) {
      for (const auto& tok : {pr.parent_token, pr.youth_token}) {
        const std::string body = h.call("GET", "/pairs/" + pr.pair_id + "/events", nullptr, tok).body.dump();
        for (const auto& m : markers) leaks += body.find(m) != std::string::npos;
      }
    }
    pass = pass && leaks == 0 && !markers.empty();
    detail << ", " << markers.size() << " youth reasons, " << leaks << " leaked";

    // Snapshot endpoints before restart.
    h.call("POST", "/pairs/" + p.pair_id + "/videos", {{"video_id", "e2e"}, {"frames", "frames"}, {"subtitles", "subs.srt"}},
           p.youth_token);
    h.call("POST", "/videos/e2e/censor", nullptr, p.parent_token);
    token = p.parent_token;
    const auto pair = h.call("GET", "/pairs/" + p.pair_id, nullptr, token);
    for (const char* suffix : {"", "/panels/parent", "/panels/youth", "/panels/co", "/events", "/videos",
                               "/reports?from=0&to=99999999999"}) {
      paths.push_back("/pairs/" + p.pair_id + suffix);
    }
    for (const auto& sid2 : pair.body.at("sessions")) paths.push_back("/consensus/" + sid2.get<std::string>());
    paths.push_back("/videos/e2e");
    paths.push_back("/videos/e2e/feedback");
    for (const auto& path : paths) before.push_back(h.call("GET", path, nullptr, token));
  }
  testing::ServiceHarness again(dir.path());
  std::size_t same = 0;
  for (std::size_t i = 0; i < paths.size(); ++i) {
    const auto after = again.call("GET", paths[i], nullptr, token);
    same += after.status == before[i].status && after.body == before[i].body;
  }
  pass = pass && same == paths.size();
  detail << ", replay identical " << same << "/" << paths.size() << " snapshots";
  return {pass, detail.str()};
}

Verdict guideline_roundtrip() {
  std::mt19937_64 rng(777);
  int identical = 0, rejected = 0;
  for (int i = 0; i < 100; ++i) {
    const auto set = testing::random_guideline_set(rng);
    identical += load_common(std::string_view(serialize_common(set).dump())) == set;
  }
  for (int i = 0; i < 100; ++i) {
    const auto bad = testing::with_overlapping_bands(rng, testing::random_guideline_set(rng));
    try {
      load_common_json(serialize_common(bad));
    } catch (const Error& e) {
      rejected += e.code() == ErrorCode::OverlapError;
    }
  }
  return {identical == 100 && rejected == 100,
          std::to_string(identical) + "/100 round-trips identical, " + std::to_string(rejected) +
              "/100 overlaps rejected"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <copref-cli>\n";
    return 2;
  }
  g_cli = argv[1];

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"consensus state machine", consensus_suite},
      {"simulation harness", simulation_harness},
      {"ingest oracles", ingest_oracles},
      {"feedback math", feedback_math},
      {"end-to-end determinism", end_to_end},
      {"combine_chunks", combine},
      {"service contracts", service_contracts},
      {"guideline round-trip", guideline_roundtrip},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << name << ": " << v.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size()
            << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
