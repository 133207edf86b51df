#include "copref/pipeline.hpp"

namespace copref {

BundlePaths bundle_paths(const std::filesystem::path& frames,
                         const std::filesystem::path& subtitles) {
  std::error_code ec;
  const bool dir = std::filesystem::is_directory(frames, ec);
  return {dir ? frames / "manifest.json" : frames, subtitles};
}

LoadedBundle load_bundle(const BundlePaths& paths) {
  LoadedBundle b;
  // Subtitles first so a missing transcript is reported before frame errors.
  const std::string subs = read_text_file(paths.subtitles, "subtitles");
  b.cues = parse_subtitles(subs, subtitle_format_for(paths.subtitles));
  b.frames = load_frame_manifest(paths.frames_manifest);
  return b;
}

PipelineOutput run_censor(AnalysisProvider& provider, const LoadedBundle& bundle,
                          const PreferencePanel& co_pref, const CommonGuidelineSet& common,
                          const IngestConfig& ingest_cfg, const std::string& video_id,
                          TimestampMs produced_at) {
  PipelineOutput out;
  out.ingest = ingest(bundle.frames, bundle.cues, ingest_cfg);
  const std::string context = render_prompt_context(common, derive_personalized(co_pref));
  out.result = provider.censor(out.ingest.chunks, {video_id, context, &common, produced_at});
  out.feedback = build_in_time(co_pref, out.result);
  return out;
}

json pipeline_to_json(const PipelineOutput& out) {
  return {{"result", result_to_json(out.result)}, {"feedback", feedback_to_json(out.feedback)}};
}

}  // namespace copref
