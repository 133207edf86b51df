#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "copref/json.hpp"
#include "copref/time.hpp"

namespace copref {

// ---------------------------------------------------------------------------
// Subtitles

struct SubtitleCue {
  TimestampMs start_ms = 0;
  TimestampMs end_ms = 0;
  std::string text;

  friend bool operator==(const SubtitleCue&, const SubtitleCue&) = default;
};

enum class SubtitleFormat { Srt, WebVtt };

/// Parses an SRT or WebVTT document. Cue numbering, identifiers, cue
/// settings, NOTE/STYLE/REGION blocks and inline markup are dropped; cues
/// come back stably sorted by start time. Throws ParseError with the
/// 1-based line number on malformed input.
std::vector<SubtitleCue> parse_subtitles(std::string_view document,
                                         SubtitleFormat format);

/// `.vtt` maps to WebVTT, everything else to SRT.
SubtitleFormat subtitle_format_for(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Frames

/// 8-bit luminance raster, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  friend bool operator==(const GrayImage&, const GrayImage&) = default;
};

/// Reads binary or ASCII PGM/PPM (P2, P3, P5, P6). Color images are reduced
/// to luminance as round(0.299 R + 0.587 G + 0.114 B).
GrayImage read_pnm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

struct FrameRef {
  std::int64_t index = 0;
  TimestampMs timestamp_ms = 0;
  std::shared_ptr<const GrayImage> image;
  /// Optional sidecar labels describing the frame's visual content. The
  /// mock provider treats them as extra transcript tokens.
  std::vector<std::string> labels;
};

struct IngestConfig {
  double similarity_threshold = 0.85;
  int histogram_bins = 64;
  std::size_t chunk_budget = 8000;
  /// Length of the final window when the frame rate cannot be inferred
  /// (a single frame, or all frames sharing one timestamp).
  DurationMs default_frame_interval_ms = 1000;

  void validate() const;
};

/// Histogram intersection of the two frames' normalized luminance
/// histograms. 1 for identical frames, 0 for disjoint histograms.
double frame_similarity(const FrameRef& a, const FrameRef& b, int bins);

struct KeyFrame {
  FrameRef frame;
  TimestampMs window_start = 0;
  TimestampMs window_end = 0;
};

/// Sequential scan: frame 0 is a keyframe, and each later frame becomes one
/// when its similarity to the most recent keyframe drops below the
/// threshold. Windows are [start, end) and tile [0, duration], where
/// duration is the last timestamp plus the median frame interval.
std::vector<KeyFrame> extract_keyframes(std::span<const FrameRef> frames,
                                        const IngestConfig& cfg);

// ---------------------------------------------------------------------------
// Alignment and chunking

struct AlignedSegment {
  KeyFrame keyframe;
  std::vector<SubtitleCue> cues;

  /// Cue texts joined by newlines.
  std::string transcript() const;
  DurationMs duration_ms() const {
    return keyframe.window_end - keyframe.window_start;
  }
};

/// Assigns each cue to the window containing its midpoint (start + end) / 2.
/// The final window is closed on the right.
std::vector<AlignedSegment> align(std::span<const KeyFrame> keyframes,
                                  std::span<const SubtitleCue> cues);

struct Chunk {
  std::vector<AlignedSegment> segments;

  /// Non-empty segment transcripts joined by newlines. Its byte length is
  /// what the chunk budget bounds.
  std::string transcript() const;
  DurationMs duration_ms() const;
  std::vector<std::string> frame_labels() const;
};

/// Greedy left-to-right packing of whole segments; a new chunk starts when
/// the next segment would push the transcript past `budget` bytes.
std::vector<Chunk> chunk(std::span<const AlignedSegment> segments,
                         std::size_t budget);

// ---------------------------------------------------------------------------
// Bundles

/// Reads a frame manifest: a JSON array of
/// {"index", "timestamp_ms", "file", optional "labels"} with image paths
/// relative to the manifest's directory.
std::vector<FrameRef> load_frame_manifest(const std::filesystem::path& manifest);

std::string read_text_file(const std::filesystem::path& path,
                           std::string_view what);

struct IngestResult {
  std::vector<KeyFrame> keyframes;
  std::vector<AlignedSegment> segments;
  std::vector<Chunk> chunks;
};

IngestResult ingest(std::span<const FrameRef> frames,
                    std::span<const SubtitleCue> cues, const IngestConfig& cfg);

json cue_to_json(const SubtitleCue& cue);
json ingest_to_json(const IngestResult& result);

}  // namespace copref
