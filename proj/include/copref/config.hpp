#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "copref/consensus.hpp"
#include "copref/ingest.hpp"
#include "copref/provider.hpp"

namespace copref {

/// The configuration file shared by the service and the CLI. Relative paths
/// resolve against the file's directory.
struct AppConfig {
  std::string listen_host = "127.0.0.1";
  int listen_port = 8080;
  std::filesystem::path data_dir = "data";
  /// Bundle paths submitted to the service resolve against this directory.
  std::filesystem::path bundle_root = ".";
  std::optional<ProviderConfig> provider;
  std::filesystem::path guidelines_path;
  ConsensusConfig consensus;
  IngestConfig ingest;
  DurationMs pairing_ttl_ms = kMillisPerDay;
};

AppConfig app_config_from_json(const json& doc, const std::filesystem::path& base_dir);
AppConfig load_app_config(const std::filesystem::path& path);

}  // namespace copref
