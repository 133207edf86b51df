#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "copref/config.hpp"
#include "copref/consensus.hpp"
#include "copref/error.hpp"
#include "copref/feedback.hpp"
#include "copref/guidelines.hpp"
#include "copref/provider.hpp"

namespace copref {

/// One line of the event log. `seq` counts from 0 within each pair.
struct EventRecord {
  std::uint64_t seq = 0;
  std::string pair_id;
  std::string actor;  // "parent", "youth" or "system"
  std::string kind;
  json payload;
  TimestampMs at = 0;

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

json record_to_json(const EventRecord& r);
EventRecord record_from_json(const json& doc);

/// Reads a JSON-lines log. A malformed line raises SchemaError naming its
/// line number.
std::vector<EventRecord> read_event_log(const std::filesystem::path& path);

int http_status(ErrorCode code);
json error_body(const Error& e);

/// Public view of a record for the events endpoint. Fields are copied from
/// an allowlist per kind so free text never leaks.
json event_summary(const EventRecord& r);

/// ^[A-Z0-9]{6}$ from a cryptographic source.
std::string random_pairing_code();
std::string random_hex(std::size_t bytes);
std::string sha256_hex(std::string_view data);

struct ApiRequest {
  std::string method;
  std::string path;
  std::map<std::string, std::string> query;
  std::string authorization;  // raw header value
  std::string body;
};

struct ApiResponse {
  int status = 200;
  json body;
};

/// The service state: pairs, panels, consensus sessions, videos and their
/// feedback, all rebuilt from the event log at construction.
class Engine {
 public:
  using Clock = std::function<TimestampMs()>;

  struct Options {
    AppConfig config;
    CommonGuidelineSet common;
    /// Defaults to the wall clock.
    Clock clock;
    /// Defaults to make_provider(config.provider) when one is configured.
    std::shared_ptr<AnalysisProvider> provider;
  };

  explicit Engine(Options options);
  ~Engine();

  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  /// Routes one request. Errors become {"error", "message"} bodies with the
  /// mapped status; this never throws.
  ApiResponse handle(const ApiRequest& request);

  std::size_t event_count() const;

 private:
  struct State;
  Options opts_;
  std::unique_ptr<State> state_;
  mutable std::mutex mu_;
};

/// Engine options from a config file: guidelines loaded, provider built.
Engine::Options engine_options(const AppConfig& config);

/// HTTP/1.1 front end for an Engine.
class HttpService {
 public:
  explicit HttpService(Engine& engine);
  ~HttpService();

  /// Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace copref
