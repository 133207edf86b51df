#include <algorithm>
#include <charconv>

#include "copref/error.hpp"
#include "copref/ingest.hpp"

namespace copref {

namespace {

struct Line {
  std::size_t number;
  std::string_view text;
};

std::vector<Line> split_lines(std::string_view doc) {
  if (doc.starts_with("\xEF\xBB\xBF")) doc.remove_prefix(3);
  std::vector<Line> lines;
  std::size_t number = 1;
  while (!doc.empty()) {
    const auto nl = doc.find('\n');
    std::string_view line = doc.substr(0, nl);
    if (line.ends_with('\r')) line.remove_suffix(1);
    lines.push_back({number++, line});
    if (nl == std::string_view::npos) break;
    doc.remove_prefix(nl + 1);
  }
  return lines;
}

bool is_blank(std::string_view s) {
  return s.find_first_not_of(" \t") == std::string_view::npos;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  fail(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + what);
}

bool parse_digits(std::string_view s, std::int64_t& out) {
  if (s.empty() || !std::all_of(s.begin(), s.end(),
                                [](char c) { return c >= '0' && c <= '9'; })) {
    return false;
  }
  return std::from_chars(s.data(), s.data() + s.size(), out).ec == std::errc{};
}

// [HH:]MM:SS(,|.)mmm
TimestampMs parse_time(std::string_view s, std::size_t line) {
  const auto sep = s.find_last_of(",.");
  if (sep == std::string_view::npos) parse_fail(line, "timestamp missing milliseconds");
  std::int64_t ms = 0;
  const auto frac = s.substr(sep + 1);
  if (frac.size() != 3 || !parse_digits(frac, ms)) {
    parse_fail(line, "bad milliseconds in timestamp '" + std::string(s) + "'");
  }
  std::vector<std::int64_t> parts;
  std::string_view hms = s.substr(0, sep);
  while (true) {
    const auto colon = hms.find(':');
    std::int64_t v = 0;
    if (!parse_digits(hms.substr(0, colon), v)) {
      parse_fail(line, "bad timestamp '" + std::string(s) + "'");
    }
    parts.push_back(v);
    if (colon == std::string_view::npos) break;
    hms.remove_prefix(colon + 1);
  }
  if (parts.size() < 2 || parts.size() > 3) {
    parse_fail(line, "bad timestamp '" + std::string(s) + "'");
  }
  if (parts.size() == 2) parts.insert(parts.begin(), 0);
  if (parts[1] > 59 || parts[2] > 59) {
    parse_fail(line, "minutes/seconds out of range in '" + std::string(s) + "'");
  }
  return ((parts[0] * 60 + parts[1]) * 60 + parts[2]) * 1000 + ms;
}

std::pair<TimestampMs, TimestampMs> parse_timing(std::string_view text,
                                                 std::size_t line) {
  const auto arrow = text.find("-->");
  const auto start = trim(text.substr(0, arrow));
  auto rest = trim(text.substr(arrow + 3));
  // WebVTT cue settings follow the end time.
  rest = rest.substr(0, rest.find_first_of(" \t"));
  const TimestampMs s = parse_time(start, line);
  const TimestampMs e = parse_time(rest, line);
  if (e <= s) parse_fail(line, "cue end is not after its start");
  return {s, e};
}

void decode_entity(std::string& out, std::string_view& s) {
  static constexpr std::pair<std::string_view, std::string_view> kEntities[] = {
      {"&amp;", "&"}, {"&lt;", "<"}, {"&gt;", ">"}, {"&nbsp;", " "},
      {"&lrm;", ""},  {"&rlm;", ""}};
  for (const auto& [name, value] : kEntities) {
    if (s.starts_with(name)) {
      out += value;
      s.remove_prefix(name.size());
      return;
    }
  }
  out.push_back('&');
  s.remove_prefix(1);
}

// Drops <tags> and {\override} blocks and decodes the common entities.
std::string strip_markup(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  while (!s.empty()) {
    if (s.front() == '<') {
      const auto close = s.find('>');
      if (close != std::string_view::npos) {
        s.remove_prefix(close + 1);
        continue;
      }
    } else if (s.starts_with("{\\")) {
      const auto close = s.find('}');
      if (close != std::string_view::npos) {
        s.remove_prefix(close + 1);
        continue;
      }
    } else if (s.front() == '&') {
      decode_entity(out, s);
      continue;
    }
    out.push_back(s.front());
    s.remove_prefix(1);
  }
  return out;
}

// Reads cue text lines starting at `i` until a blank line.
std::string read_cue_text(const std::vector<Line>& lines, std::size_t& i,
                          std::size_t timing_line) {
  std::string text;
  while (i < lines.size() && !is_blank(lines[i].text)) {
    const std::string clean(trim(strip_markup(lines[i].text)));
    if (!clean.empty()) {
      if (!text.empty()) text.push_back('\n');
      text += clean;
    }
    ++i;
  }
  if (text.empty()) parse_fail(timing_line, "cue has no text");
  return text;
}

std::vector<SubtitleCue> parse_srt(const std::vector<Line>& lines) {
  std::vector<SubtitleCue> cues;
  std::size_t i = 0;
  while (i < lines.size()) {
    if (is_blank(lines[i].text)) {
      ++i;
      continue;
    }
    std::int64_t ignored = 0;
    if (lines[i].text.find("-->") == std::string_view::npos) {
      if (!parse_digits(trim(lines[i].text), ignored)) {
        parse_fail(lines[i].number, "expected cue number or timing line");
      }
      ++i;
      if (i >= lines.size() || lines[i].text.find("-->") == std::string_view::npos) {
        parse_fail(i < lines.size() ? lines[i].number : lines.back().number,
                   "expected timing line");
      }
    }
    const std::size_t timing_line = lines[i].number;
    const auto [s, e] = parse_timing(lines[i].text, timing_line);
    ++i;
    cues.push_back({s, e, read_cue_text(lines, i, timing_line)});
  }
  return cues;
}

std::vector<SubtitleCue> parse_vtt(const std::vector<Line>& lines) {
  std::vector<SubtitleCue> cues;
  std::size_t i = 0;
  if (lines.empty() || !lines[0].text.starts_with("WEBVTT")) {
    parse_fail(1, "missing WEBVTT header");
  }
  while (i < lines.size() && !is_blank(lines[i].text)) ++i;  // header block
  while (i < lines.size()) {
    if (is_blank(lines[i].text)) {
      ++i;
      continue;
    }
    const auto first = lines[i].text;
    if (first.starts_with("NOTE") || first.starts_with("STYLE") ||
        first.starts_with("REGION")) {
      while (i < lines.size() && !is_blank(lines[i].text)) ++i;
      continue;
    }
    if (first.find("-->") == std::string_view::npos) {
      ++i;  // cue identifier
      if (i >= lines.size() || lines[i].text.find("-->") == std::string_view::npos) {
        parse_fail(i < lines.size() ? lines[i].number : lines.back().number,
                   "expected timing line");
      }
    }
    const std::size_t timing_line = lines[i].number;
    const auto [s, e] = parse_timing(lines[i].text, timing_line);
    ++i;
    cues.push_back({s, e, read_cue_text(lines, i, timing_line)});
  }
  return cues;
}

}  // namespace

std::vector<SubtitleCue> parse_subtitles(std::string_view document,
                                         SubtitleFormat format) {
  const auto lines = split_lines(document);
  auto cues = format == SubtitleFormat::Srt ? parse_srt(lines) : parse_vtt(lines);
  std::stable_sort(cues.begin(), cues.end(),
                   [](const SubtitleCue& a, const SubtitleCue& b) {
                     return a.start_ms < b.start_ms;
                   });
  return cues;
}

SubtitleFormat subtitle_format_for(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".vtt" ? SubtitleFormat::WebVtt : SubtitleFormat::Srt;
}

}  // namespace copref
