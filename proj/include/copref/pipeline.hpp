#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "copref/feedback.hpp"
#include "copref/guidelines.hpp"
#include "copref/ingest.hpp"
#include "copref/provider.hpp"

namespace copref {

/// A video bundle on disk: a frame manifest plus a subtitle document.
struct BundlePaths {
  std::filesystem::path frames_manifest;
  std::filesystem::path subtitles;
};

struct LoadedBundle {
  std::vector<FrameRef> frames;
  std::vector<SubtitleCue> cues;
};

/// `frames` may name the manifest itself or a directory holding
/// manifest.json.
BundlePaths bundle_paths(const std::filesystem::path& frames,
                         const std::filesystem::path& subtitles);

LoadedBundle load_bundle(const BundlePaths& paths);

struct PipelineOutput {
  IngestResult ingest;
  CensorshipResult result;
  InTimeFeedback feedback;
};

/// ingest -> provider censor -> in-time feedback.
PipelineOutput run_censor(AnalysisProvider& provider, const LoadedBundle& bundle,
                          const PreferencePanel& co_pref, const CommonGuidelineSet& common,
                          const IngestConfig& ingest_cfg, const std::string& video_id,
                          TimestampMs produced_at);

/// {"result": CensorshipResult, "feedback": InTimeFeedback}
json pipeline_to_json(const PipelineOutput& out);

}  // namespace copref
