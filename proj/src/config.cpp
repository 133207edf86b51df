#include "copref/config.hpp"

#include <algorithm>

#include "copref/error.hpp"

namespace copref {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

AppConfig app_config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  static const char* kKeys[] = {"listen",   "data_dir",  "bundle_root",   "provider",
                                "guidelines_path", "consensus", "ingest", "pairing_ttl_ms"};
  if (!doc.is_object()) fail(ErrorCode::SchemaError, "config: expected object");
  for (const auto& [key, _] : doc.items()) {
    if (std::find(std::begin(kKeys), std::end(kKeys), key) == std::end(kKeys)) {
      fail(ErrorCode::SchemaError, "config." + key + ": unknown key");
    }
  }
  AppConfig cfg;
  try {
    if (doc.contains("listen")) {
      cfg.listen_host = doc["listen"].value("host", cfg.listen_host);
      cfg.listen_port = doc["listen"].value("port", cfg.listen_port);
    }
    cfg.data_dir = resolve(base_dir, doc.value("data_dir", std::string("data")));
    cfg.bundle_root = resolve(base_dir, doc.value("bundle_root", std::string(".")));
    if (doc.contains("guidelines_path")) {
      cfg.guidelines_path = resolve(base_dir, doc["guidelines_path"].get<std::string>());
    }
    if (doc.contains("provider")) cfg.provider = provider_config_from_json(doc["provider"], base_dir);
    if (doc.contains("consensus")) cfg.consensus = consensus_config_from_json(doc["consensus"]);
    if (cfg.provider) cfg.ingest.chunk_budget = cfg.provider->context_budget;
    if (doc.contains("ingest")) {
      const json& in = doc["ingest"];
      cfg.ingest.similarity_threshold = in.value("similarity_threshold", cfg.ingest.similarity_threshold);
      cfg.ingest.histogram_bins = in.value("histogram_bins", cfg.ingest.histogram_bins);
      cfg.ingest.chunk_budget = in.value("chunk_budget", cfg.ingest.chunk_budget);
      cfg.ingest.default_frame_interval_ms =
          in.value("default_frame_interval_ms", cfg.ingest.default_frame_interval_ms);
    }
    cfg.pairing_ttl_ms = doc.value("pairing_ttl_ms", cfg.pairing_ttl_ms);
  } catch (const json::type_error& e) {
    fail(ErrorCode::SchemaError, std::string("config: ") + e.what());
  }
  cfg.ingest.validate();
  if (cfg.pairing_ttl_ms <= 0) fail(ErrorCode::InvalidArgument, "config: pairing_ttl_ms <= 0");
  if (cfg.listen_port < 0 || cfg.listen_port > 65535) {
    fail(ErrorCode::InvalidArgument, "config: listen.port out of range");
  }
  return cfg;
}

AppConfig load_app_config(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(read_text_file(path, "config"));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::SchemaError, std::string("config: ") + e.what());
  }
  return app_config_from_json(doc, path.parent_path());
}

}  // namespace copref
