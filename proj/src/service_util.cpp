#include <openssl/evp.h>
#include <openssl/rand.h>

#include <fstream>
#include <set>

#include "copref/service.hpp"

namespace copref {

namespace {

void random_bytes(unsigned char* out, std::size_t n) {
  if (RAND_bytes(out, static_cast<int>(n)) != 1) {
    fail(ErrorCode::IoError, "random source unavailable");
  }
}

const json* field(const json& payload, const char* key) {
  return payload.is_object() && payload.contains(key) ? &payload[key] : nullptr;
}

}  // namespace

std::string random_pairing_code() {
  static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
  // 252 = 7 * 36; larger bytes are rejected so every symbol is equally likely.
  std::string code;
  while (code.size() < 6) {
    unsigned char buf[16];
    random_bytes(buf, sizeof buf);
    for (unsigned char b : buf) {
      if (b < 252 && code.size() < 6) code += kAlphabet[b % 36];
    }
  }
  return code;
}

std::string random_hex(std::size_t bytes) {
  std::vector<unsigned char> buf(bytes);
  random_bytes(buf.data(), bytes);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char b : buf) {
    out += kHex[b >> 4];
    out += kHex[b & 15];
  }
  return out;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::IoError, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

json record_to_json(const EventRecord& r) {
  return {{"seq", r.seq},         {"pair_id", r.pair_id}, {"actor", r.actor},
          {"kind", r.kind},       {"payload", r.payload}, {"at", r.at}};
}

EventRecord record_from_json(const json& doc) {
  if (!doc.is_object()) fail(ErrorCode::SchemaError, "event: expected object");
  EventRecord r;
  try {
    r.seq = doc.at("seq").get<std::uint64_t>();
    r.pair_id = doc.at("pair_id").get<std::string>();
    r.actor = doc.at("actor").get<std::string>();
    r.kind = doc.at("kind").get<std::string>();
    r.payload = doc.at("payload");
    r.at = doc.at("at").get<TimestampMs>();
  } catch (const json::exception& e) {
    fail(ErrorCode::SchemaError, std::string("event: ") + e.what());
  }
  return r;
}

std::vector<EventRecord> read_event_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "event log: cannot open " + path.string());
  std::vector<EventRecord> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      fail(ErrorCode::SchemaError, "line " + std::to_string(n) + ": " + e.what());
    } catch (const Error& e) {
      fail(e.code(), "line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownCode:
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::WrongStage:
    case ErrorCode::NotFinalized:
    case ErrorCode::CodeUsed:
    case ErrorCode::CodeExpired:
    case ErrorCode::RoleTaken:
      return 409;
    case ErrorCode::WrongActor:
    case ErrorCode::WrongRole:
    case ErrorCode::Forbidden:
      return 403;
    case ErrorCode::Unauthorized:
      return 401;
    case ErrorCode::ProviderUnavailable:
    case ErrorCode::MalformedProviderOutput:
    case ErrorCode::GuidelineViolation:
      return 502;
    case ErrorCode::IoError:
      return 500;
    default:
      return 422;
  }
}

json error_body(const Error& e) {
  return {{"error", error_name(e.code())}, {"message", e.what()}};
}

json event_summary(const EventRecord& r) {
  json out{{"seq", r.seq}, {"actor", r.actor}, {"kind", r.kind}, {"at", r.at}};
  const json& p = r.payload;
  auto copy = [&](const char* key) {
    if (const json* v = field(p, key)) out[key] = *v;
  };
  if (r.kind == "pair.joined") {
    copy("role");
  } else if (r.kind == "panel.set") {
    if (const json* panel = field(p, "panel")) {
      out["role"] = panel->value("role", "");
      out["revision"] = panel->value("revision", 0);
      out["keyword_count"] = panel->contains("entries") ? (*panel)["entries"].size() : 0;
    }
    copy("source");
  } else if (r.kind.starts_with("consensus.")) {
    copy("session_id");
    if (const json* e = field(p, "event")) {
      const json* ep = field(*e, "payload");
      if (ep && r.kind == "consensus.respond") {
        if (const json* d = field(*ep, "decision")) out["decision"] = *d;
      }
      if (ep && (r.kind == "consensus.reason" || r.kind == "consensus.position")) {
        if (const json* k = field(*ep, "keyword")) out["keyword"] = *k;
      }
    }
  } else if (r.kind == "video.registered") {
    copy("video_id");
  } else if (r.kind == "video.censored") {
    copy("video_id");
    if (const json* res = field(p, "result")) out["age_band"] = res->value("age_band", "");
  }
  return out;
}

}  // namespace copref
