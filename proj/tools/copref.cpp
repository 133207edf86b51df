#include <CLI11.hpp>

#include <csignal>
#include <fstream>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <thread>

#include "copref/config.hpp"
#include "copref/pipeline.hpp"
#include "copref/service.hpp"

using namespace copref;

namespace {

void write_output(const std::optional<std::string>& out, const std::string& text) {
  if (!out) {
    std::cout << text;
    return;
  }
  std::ofstream f(*out, std::ios::binary);
  if (!f) fail(ErrorCode::IoError, "cannot write " + *out);
  f << text;
  if (!f) fail(ErrorCode::IoError, "cannot write " + *out);
}

std::optional<AppConfig> maybe_config(const std::optional<std::string>& path) {
  if (!path) return std::nullopt;
  return load_app_config(*path);
}

struct IngestFlags {
  std::string frames;
  std::string subs;
  std::optional<std::string> config;
  std::optional<double> threshold;
  std::optional<int> bins;
  std::optional<std::size_t> budget;
  std::optional<std::string> out;
};

IngestConfig ingest_config(const std::optional<AppConfig>& cfg, const IngestFlags& f) {
  IngestConfig ic = cfg ? cfg->ingest : IngestConfig{};
  if (f.threshold) ic.similarity_threshold = *f.threshold;
  if (f.bins) ic.histogram_bins = *f.bins;
  if (f.budget) ic.chunk_budget = *f.budget;
  ic.validate();
  return ic;
}

int run_ingest(const IngestFlags& f) {
  const auto cfg = maybe_config(f.config);
  const LoadedBundle bundle = load_bundle(bundle_paths(f.frames, f.subs));
  const IngestResult result = ingest(bundle.frames, bundle.cues, ingest_config(cfg, f));
  write_output(f.out, ingest_to_json(result).dump(2) + "\n");
  return 0;
}

struct CensorFlags {
  IngestFlags io;
  std::string panel;
  std::optional<std::string> guidelines;
  std::optional<std::string> provider;
  std::optional<std::string> lexicon;
  std::optional<std::string> endpoint;
  std::optional<std::string> model;
  std::string video_id = "video";
  TimestampMs at = 0;
};

int run_censor_cmd(const CensorFlags& f) {
  const auto cfg = maybe_config(f.io.config);
  // Inputs are validated before the provider is built so that input errors
  // are reported ahead of provider problems.
  const LoadedBundle bundle = load_bundle(bundle_paths(f.io.frames, f.io.subs));
  const PreferencePanel co_pref = panel_from_json([&] {
    try {
      return json::parse(read_text_file(f.panel, "panel"));
    } catch (const json::parse_error& e) {
      fail(ErrorCode::SchemaError, std::string("panel: ") + e.what());
    }
  }());

  std::filesystem::path guidelines_path;
  if (f.guidelines) {
    guidelines_path = *f.guidelines;
  } else if (cfg && !cfg->guidelines_path.empty()) {
    guidelines_path = cfg->guidelines_path;
  } else {
    fail(ErrorCode::InvalidArgument, "guidelines: pass --guidelines or set guidelines_path in --config");
  }
  const CommonGuidelineSet common = load_common(read_text_file(guidelines_path, "guidelines"));

  ProviderConfig pc = cfg && cfg->provider ? *cfg->provider : ProviderConfig{};
  if (f.provider) pc.kind = *f.provider == "live" ? ProviderKind::Live : ProviderKind::Mock;
  if (f.lexicon) pc.lexicon_path = *f.lexicon;
  if (f.endpoint) pc.endpoint = *f.endpoint;
  if (f.model) pc.model_name = *f.model;
  pc.validate();

  IngestFlags io = f.io;
  if (!io.budget && !(cfg && cfg->provider)) io.budget = pc.context_budget;
  const IngestConfig ic = ingest_config(cfg, io);

  const auto provider = make_provider(pc);
  const PipelineOutput out = run_censor(*provider, bundle, co_pref, common, ic, f.video_id, f.at);
  write_output(f.io.out, pipeline_to_json(out).dump(2) + "\n");
  return 0;
}

struct SimFlags {
  int sessions = 100;
  std::uint64_t seed = 0;
  double accept = 0.5;
  double compromise = 0.5;
  std::optional<int> max_iter;
  int max_keywords = 6;
  std::optional<std::string> config;
};

int run_sim(const SimFlags& f) {
  const auto cfg = maybe_config(f.config);
  SimulationConfig sc;
  sc.sessions = f.sessions;
  sc.seed = f.seed;
  sc.max_panel_keywords = f.max_keywords;
  if (cfg) sc.consensus = cfg->consensus;
  if (f.max_iter) sc.consensus.max_iterations = *f.max_iter;
  sc.consensus.validate();
  const AgentPolicy policy{f.accept, f.compromise};
  std::cout << format_stats(simulate(policy, policy, sc));
  return 0;
}

struct ReportFlags {
  std::string events;
  TimestampMs from = 0;
  TimestampMs to = 0;
  DurationMs bucket = kMillisPerDay;
  std::optional<std::string> csv;
};

/// Lines are event records (only video.censored ones count) or bare
/// feedback documents.
std::vector<InTimeFeedback> read_feedback_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) fail(ErrorCode::NotFound, "events: not found");
    fail(ErrorCode::IoError, "events: cannot read");
  }
  std::vector<InTimeFeedback> out;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json doc = json::parse(line);
      if (doc.is_object() && doc.contains("kind") && doc.contains("payload")) {
        if (doc["kind"] == "video.censored") out.push_back(feedback_from_json(doc["payload"].at("feedback")));
      } else {
        out.push_back(feedback_from_json(doc));
      }
    } catch (const json::exception& e) {
      fail(ErrorCode::ParseError, "events: line " + std::to_string(n) + ": " + e.what());
    } catch (const Error& e) {
      fail(ErrorCode::ParseError, "events: line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

int run_report(const ReportFlags& f) {
  const auto records = read_feedback_log(f.events);
  const SummaryReport report = aggregate(records, Period{f.from, f.to, f.bucket});
  if (f.csv) write_output(f.csv, trend_csv(report));
  std::cout << report_to_json(report).dump(2) << "\n";
  return 0;
}

int run_serve(const std::string& config_path) {
  const AppConfig cfg = load_app_config(config_path);
  Engine engine(engine_options(cfg));
  HttpService http(engine);

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  const int port = http.bind(cfg.listen_host, cfg.listen_port);
  std::thread([&http, signals] {
    int sig = 0;
    sigwait(&signals, &sig);
    http.stop();
  }).detach();
  std::cout << "listening on " << cfg.listen_host << ":" << port << std::endl;
  http.listen();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Collaborative video preference and censorship tools"};
  app.require_subcommand(1);

  IngestFlags ingest_flags;
  auto add_io = [](CLI::App* cmd, IngestFlags& f) {
    cmd->add_option("--frames", f.frames, "Frame manifest, or a directory holding manifest.json")
        ->required();
    cmd->add_option("--subs", f.subs, "Subtitle document (.srt or .vtt)")->required();
    cmd->add_option("--config", f.config, "Service config file (ingest and provider settings)");
    cmd->add_option("--threshold", f.threshold, "Keyframe similarity threshold in (0, 1]");
    cmd->add_option("--bins", f.bins, "Luminance histogram bins");
    cmd->add_option("--budget", f.budget, "Chunk budget in characters");
    cmd->add_option("--out", f.out, "Output file (default: stdout)");
  };
  auto* ingest_cmd = app.add_subcommand("ingest", "Extract keyframes, align subtitles and chunk a bundle");
  add_io(ingest_cmd, ingest_flags);

  CensorFlags censor_flags;
  auto* censor_cmd = app.add_subcommand("censor", "Run ingest, the provider and in-time feedback on a bundle");
  add_io(censor_cmd, censor_flags.io);
  censor_cmd->add_option("--panel", censor_flags.panel, "Co-preference panel JSON")->required();
  censor_cmd->add_option("--guidelines", censor_flags.guidelines, "Common guideline document");
  censor_cmd->add_option("--provider", censor_flags.provider, "Analysis provider")
      ->check(CLI::IsMember({"mock", "live"}));
  censor_cmd->add_option("--lexicon", censor_flags.lexicon, "Mock provider lexicon");
  censor_cmd->add_option("--endpoint", censor_flags.endpoint, "Live provider URL");
  censor_cmd->add_option("--model", censor_flags.model, "Live provider model name");
  censor_cmd->add_option("--video-id", censor_flags.video_id, "Video id recorded in the output")
      ->capture_default_str();
  censor_cmd->add_option("--at", censor_flags.at, "produced_at timestamp in ms")->capture_default_str();

  SimFlags sim_flags;
  auto* sim_cmd = app.add_subcommand("consensus-sim", "Simulate consensus sessions between scripted agents");
  sim_cmd->add_option("--sessions", sim_flags.sessions, "Number of sessions")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  sim_cmd->add_option("--seed", sim_flags.seed, "RNG seed")->capture_default_str();
  sim_cmd->add_option("--accept-prob", sim_flags.accept, "Probability the reviewer accepts outright")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sim_cmd->add_option("--compromise-prob", sim_flags.compromise,
                      "Per-round probability a party adopts the other's position")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sim_cmd->add_option("--max-iter", sim_flags.max_iter, "Perspective-taking rounds before failure (default 3)")
      ->check(CLI::PositiveNumber);
  sim_cmd->add_option("--max-keywords", sim_flags.max_keywords, "Keywords per random panel")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim_cmd->add_option("--config", sim_flags.config, "Service config file (consensus settings)");

  ReportFlags report_flags;
  auto* report_cmd = app.add_subcommand("report", "Aggregate in-time feedback into a summary report");
  report_cmd->add_option("--events", report_flags.events,
                         "JSON-lines file of event records or feedback documents")
      ->required();
  report_cmd->add_option("--from", report_flags.from, "Period start in ms (inclusive)")->required();
  report_cmd->add_option("--to", report_flags.to, "Period end in ms (exclusive)")->required();
  report_cmd->add_option("--bucket-ms", report_flags.bucket, "Trend bucket width in ms")
      ->capture_default_str();
  report_cmd->add_option("--csv", report_flags.csv, "Write the per-category trend CSV here");

  std::string serve_config;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--config", serve_config, "Service config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*ingest_cmd) return run_ingest(ingest_flags);
    if (*censor_cmd) return run_censor_cmd(censor_flags);
    if (*sim_cmd) return run_sim(sim_flags);
    if (*report_cmd) return run_report(report_flags);
    if (*serve_cmd) return run_serve(serve_config);
  } catch (const Error& e) {
    std::cerr << "error: " << error_name(e.code()) << ": " << e.what() << "\n";
    return is_validation_error(e.code()) ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
