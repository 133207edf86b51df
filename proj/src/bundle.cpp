#include <fstream>
#include <iterator>

#include "copref/error.hpp"
#include "copref/ingest.hpp"

namespace copref {

std::string read_text_file(const std::filesystem::path& path,
                           std::string_view what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) fail(ErrorCode::NotFound, std::string(what) + ": not found");
    fail(ErrorCode::IoError, std::string(what) + ": cannot read");
  }
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::vector<FrameRef> load_frame_manifest(const std::filesystem::path& manifest) {
  json doc;
  try {
    doc = json::parse(read_text_file(manifest, "frames"));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::ParseError, "frames: " + std::string(e.what()));
  }
  if (!doc.is_array()) fail(ErrorCode::SchemaError, "frames: expected a JSON array");
  const auto dir = manifest.parent_path();
  std::vector<FrameRef> frames;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const json& item = doc[i];
    const std::string where = "frames[" + std::to_string(i) + "]";
    if (!item.is_object() || !item.contains("index") ||
        !item["index"].is_number_integer() || !item.contains("timestamp_ms") ||
        !item["timestamp_ms"].is_number_integer() || !item.contains("file") ||
        !item["file"].is_string()) {
      fail(ErrorCode::SchemaError,
           where + ": expected {index: int, timestamp_ms: int, file: string}");
    }
    FrameRef f;
    f.index = item["index"].get<std::int64_t>();
    f.timestamp_ms = item["timestamp_ms"].get<TimestampMs>();
    f.image = std::make_shared<const GrayImage>(
        read_pnm(dir / item["file"].get<std::string>()));
    if (item.contains("labels")) {
      if (!item["labels"].is_array()) fail(ErrorCode::SchemaError, where + ".labels: expected array");
      for (const auto& l : item["labels"]) {
        if (!l.is_string()) fail(ErrorCode::SchemaError, where + ".labels: expected strings");
        f.labels.push_back(l.get<std::string>());
      }
    }
    frames.push_back(std::move(f));
  }
  return frames;
}

IngestResult ingest(std::span<const FrameRef> frames,
                    std::span<const SubtitleCue> cues, const IngestConfig& cfg) {
  IngestResult r;
  r.keyframes = extract_keyframes(frames, cfg);
  r.segments = align(r.keyframes, cues);
  r.chunks = chunk(r.segments, cfg.chunk_budget);
  return r;
}

json cue_to_json(const SubtitleCue& cue) {
  return {{"start_ms", cue.start_ms}, {"end_ms", cue.end_ms}, {"text", cue.text}};
}

namespace {

json segment_to_json(const AlignedSegment& seg) {
  json cues = json::array();
  for (const auto& c : seg.cues) cues.push_back(cue_to_json(c));
  return {{"keyframe_index", seg.keyframe.frame.index},
          {"keyframe_timestamp_ms", seg.keyframe.frame.timestamp_ms},
          {"window_start_ms", seg.keyframe.window_start},
          {"window_end_ms", seg.keyframe.window_end},
          {"labels", seg.keyframe.frame.labels},
          {"cues", std::move(cues)}};
}

}  // namespace

json ingest_to_json(const IngestResult& result) {
  json segments = json::array();
  for (const auto& s : result.segments) segments.push_back(segment_to_json(s));
  json chunks = json::array();
  std::size_t next = 0;
  for (const auto& c : result.chunks) {
    json ids = json::array();
    for (std::size_t i = 0; i < c.segments.size(); ++i) ids.push_back(next++);
    chunks.push_back({{"segments", std::move(ids)},
                      {"duration_ms", c.duration_ms()},
                      {"transcript_bytes", c.transcript().size()}});
  }
  return {{"keyframe_count", result.keyframes.size()},
          {"segments", std::move(segments)},
          {"chunks", std::move(chunks)}};
}

}  // namespace copref
