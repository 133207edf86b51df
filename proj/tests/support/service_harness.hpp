#pragma once

#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <thread>

#include "copref/provider.hpp"
#include "copref/service.hpp"

namespace copref::testing {

inline std::filesystem::path fixture_dir() {
  return std::filesystem::path(COPREF_SOURCE_DIR) / "tests" / "fixtures";
}

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("copref-" + std::to_string(rd()) + "-" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

struct HttpResult {
  int status = 0;
  json body;
};

/// An Engine behind a real HTTP listener on an ephemeral port, with a
/// settable clock and the mock provider on the fixture lexicon.
class ServiceHarness {
 public:
  explicit ServiceHarness(const std::filesystem::path& data_dir, ConsensusConfig consensus = {}) {
    const auto bundle = fixture_dir() / "bundle";
    Engine::Options o;
    o.config.data_dir = data_dir;
    o.config.bundle_root = bundle;
    o.config.consensus = consensus;
    o.config.ingest.chunk_budget = 400;
    o.common = load_common(read_text_file(
        std::filesystem::path(COPREF_SOURCE_DIR) / "guidelines" / "default.json", "guidelines"));
    o.clock = [this] { return now.load(); };
    o.provider = std::make_shared<MockProvider>(load_lexicon(bundle / "lexicon.json"));
    engine = std::make_unique<Engine>(std::move(o));
    http = std::make_unique<HttpService>(*engine);
    port = http->bind("127.0.0.1", 0);
    thread = std::thread([this] { http->listen(); });
    http->wait_until_ready();
    client = std::make_unique<httplib::Client>("127.0.0.1", port);
  }

  ~ServiceHarness() {
    http->stop();
    if (thread.joinable()) thread.join();
  }

  HttpResult call(const std::string& method, const std::string& path, const json& body = nullptr,
                  const std::string& token = "") {
    httplib::Headers headers;
    if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
    httplib::Result res;
    const std::string payload = body.is_null() ? "" : body.dump();
    if (method == "GET") {
      res = client->Get(path, headers);
    } else if (method == "POST") {
      res = client->Post(path, headers, payload, "application/json");
    } else {
      res = client->Put(path, headers, payload, "application/json");
    }
    if (!res) return {0, nullptr};
    return {res->status, res->body.empty() ? json(nullptr) : json::parse(res->body)};
  }

  struct Pair {
    std::string pair_id;
    std::string code;
    std::string parent_token;
    std::string youth_token;
    std::string token(Role r) const { return r == Role::Parent ? parent_token : youth_token; }
  };

  Pair make_pair() {
    Pair p;
    const auto created = call("POST", "/pairs");
    p.code = created.body.at("code");
    p.pair_id = created.body.at("pair_id");
    p.parent_token = call("POST", "/pairs/" + p.code + "/join",
                          {{"role", "parent"}, {"account", "mom"}})
                         .body.at("token");
    p.youth_token = call("POST", "/pairs/" + p.code + "/join",
                         {{"role", "youth"}, {"account", "kid"}})
                        .body.at("token");
    return p;
  }

  std::atomic<TimestampMs> now{1'000'000};
  std::unique_ptr<Engine> engine;
  std::unique_ptr<HttpService> http;
  std::thread thread;
  int port = 0;
  std::unique_ptr<httplib::Client> client;
};

/// Drives one random consensus session over HTTP for `pair`. Every reason
/// the youth gets accepted contains a fresh marker, collected in `markers`.
inline void fuzz_http_session(ServiceHarness& h, const ServiceHarness::Pair& pair,
                              std::mt19937_64& rng, std::set<std::string>& markers) {
  static const char* kWords[] = {"science", "games", "music", "violence", "cooking"};
  for (Role r : {Role::Parent, Role::Youth}) {
    json entries = json::object();
    const std::size_t n = 1 + rng() % 3;
    for (std::size_t i = 0; i < n; ++i) {
      entries[kWords[rng() % 5]] = static_cast<int>(rng() % 5) - 2;
    }
    h.call("PUT", "/pairs/" + pair.pair_id + "/panels/" + std::string(to_string(r)),
           {{"entries", entries}}, pair.token(r));
  }
  const Role initiator = rng() % 2 ? Role::Parent : Role::Youth;
  const Role reviewer = counterpart(initiator);
  const auto started = h.call("POST", "/pairs/" + pair.pair_id + "/consensus", json::object(),
                              pair.token(initiator));
  if (started.status != 201) return;
  const std::string sid = started.body.at("session_id");
  const std::string base = "/consensus/" + sid;

  json changes = json::array();
  const std::size_t k = 1 + rng() % 3;
  for (std::size_t i = 0; i < k; ++i) {
    changes.push_back({{"keyword", kWords[rng() % 5]},
                       {"position", {{"kind", "change"}, {"weight", static_cast<int>(rng() % 5) - 2}}}});
  }
  auto snap = h.call("POST", base + "/respond", {{"decision", "modify"}, {"changes", changes}},
                     pair.token(reviewer));
  if (snap.status != 200) {
    snap = h.call("POST", base + "/respond", {{"decision", "accept"}}, pair.token(reviewer));
  }
  for (int step = 0; step < 60 && snap.body.value("stage", "") != "finalized"; ++step) {
    h.now += 1000;
    const auto& conflicts = snap.body.at("conflicts");
    const Role actor = rng() % 2 ? Role::Parent : Role::Youth;
    const int op = static_cast<int>(rng() % 4);
    HttpResult r;
    if (op == 0 && !conflicts.empty()) {
      const std::string kw = conflicts[rng() % conflicts.size()].at("keyword");
      std::string reason = "because " + std::to_string(rng() % 1000);
      if (actor == Role::Youth) {
        reason = "youth-secret-" + std::to_string(rng()) + "-" + std::to_string(markers.size());
      }
      r = h.call("POST", base + "/reasons", {{"keyword", kw}, {"reason", reason}}, pair.token(actor));
      if (r.status == 200 && actor == Role::Youth) markers.insert(reason);
    } else if (op == 1 && !conflicts.empty()) {
      const auto& c = conflicts[rng() % conflicts.size()];
      const bool init = actor == initiator;
      r = h.call("POST", base + "/positions",
                 {{"keyword", c.at("keyword")},
                  {"position", init ? c.at("reviewer_position") : c.at("initiator_position")}},
                 pair.token(actor));
    } else {
      r = h.call("POST", base + "/advance", json::object(), pair.token(actor));
    }
    if (r.status == 200) snap = r;
  }
  for (int guard = 0; guard < 20 && snap.body.value("stage", "") != "finalized"; ++guard) {
    const auto r = h.call("POST", base + "/advance", json::object(), pair.parent_token);
    if (r.status == 200) snap = r;
  }
}

}  // namespace copref::testing
