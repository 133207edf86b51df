#include <algorithm>

#include "copref/error.hpp"
#include "copref/ingest.hpp"

namespace copref {

std::string AlignedSegment::transcript() const {
  std::string out;
  for (const auto& cue : cues) {
    if (!out.empty()) out.push_back('\n');
    out += cue.text;
  }
  return out;
}

std::string Chunk::transcript() const {
  std::string out;
  for (const auto& seg : segments) {
    const std::string t = seg.transcript();
    if (t.empty()) continue;
    if (!out.empty()) out.push_back('\n');
    out += t;
  }
  return out;
}

DurationMs Chunk::duration_ms() const {
  DurationMs total = 0;
  for (const auto& seg : segments) total += seg.duration_ms();
  return total;
}

std::vector<std::string> Chunk::frame_labels() const {
  std::vector<std::string> out;
  for (const auto& seg : segments) {
    const auto& labels = seg.keyframe.frame.labels;
    out.insert(out.end(), labels.begin(), labels.end());
  }
  return out;
}

std::vector<AlignedSegment> align(std::span<const KeyFrame> keyframes,
                                  std::span<const SubtitleCue> cues) {
  if (keyframes.empty()) fail(ErrorCode::EmptyInput, "no keyframes");
  if (keyframes.front().window_start != 0) {
    fail(ErrorCode::InvalidArgument, "keyframe windows must start at 0");
  }
  for (std::size_t i = 0; i < keyframes.size(); ++i) {
    if (keyframes[i].window_end < keyframes[i].window_start ||
        (i > 0 && keyframes[i].window_start != keyframes[i - 1].window_end)) {
      fail(ErrorCode::InvalidArgument, "keyframe windows must be contiguous");
    }
  }

  std::vector<AlignedSegment> segments;
  segments.reserve(keyframes.size());
  for (const auto& kf : keyframes) segments.push_back({kf, {}});

  const TimestampMs duration = keyframes.back().window_end;
  for (const auto& cue : cues) {
    // Compare doubled values so the midpoint never needs rounding.
    const TimestampMs mid2 = cue.start_ms + cue.end_ms;
    if (mid2 < 0 || mid2 > 2 * duration) {
      fail(ErrorCode::CueOutOfRange,
           "cue [" + std::to_string(cue.start_ms) + ", " +
               std::to_string(cue.end_ms) + "] lies outside [0, " +
               std::to_string(duration) + "]");
    }
    const auto it = std::upper_bound(
        keyframes.begin(), keyframes.end(), mid2,
        [](TimestampMs m, const KeyFrame& kf) { return m < 2 * kf.window_start; });
    const auto idx = static_cast<std::size_t>(std::distance(keyframes.begin(), it)) - 1;
    segments[idx].cues.push_back(cue);
  }
  return segments;
}

std::vector<Chunk> chunk(std::span<const AlignedSegment> segments,
                         std::size_t budget) {
  std::vector<Chunk> out;
  std::size_t current = 0;
  for (const auto& seg : segments) {
    const std::size_t len = seg.transcript().size();
    if (len > budget) {
      fail(ErrorCode::SegmentTooLarge,
           "segment at " + std::to_string(seg.keyframe.window_start) + " ms has " +
               std::to_string(len) + " transcript bytes, budget is " +
               std::to_string(budget));
    }
    const std::size_t grown = current + (current > 0 && len > 0 ? 1 : 0) + len;
    if (out.empty() || grown > budget) {
      out.push_back({});
      current = len;
    } else {
      current = grown;
    }
    out.back().segments.push_back(seg);
  }
  return out;
}

}  // namespace copref
