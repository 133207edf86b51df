#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>

#include "copref/error.hpp"
#include "copref/ingest.hpp"

namespace copref {

namespace {

class PnmReader {
 public:
  PnmReader(std::string data, std::string path)
      : data_(std::move(data)), path_(std::move(path)) {}

  std::string magic() {
    if (data_.size() < 2 || data_[0] != 'P') bad("not a PNM file");
    pos_ = 2;
    return data_.substr(0, 2);
  }

  int header_int() {
    skip_space_and_comments();
    int v = 0;
    bool any = false;
    while (pos_ < data_.size() && std::isdigit(static_cast<unsigned char>(data_[pos_]))) {
      v = v * 10 + (data_[pos_++] - '0');
      any = true;
      if (v > 1'000'000) bad("header value too large");
    }
    if (!any) bad("malformed header");
    return v;
  }

  void end_of_header() {
    if (pos_ >= data_.size() || !std::isspace(static_cast<unsigned char>(data_[pos_]))) {
      bad("missing whitespace after header");
    }
    ++pos_;
  }

  int raw_byte() {
    if (pos_ >= data_.size()) bad("truncated pixel data");
    return static_cast<unsigned char>(data_[pos_++]);
  }

  [[noreturn]] void bad(const std::string& what) const {
    fail(ErrorCode::ParseError, path_ + ": " + what);
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < data_.size()) {
      if (std::isspace(static_cast<unsigned char>(data_[pos_]))) {
        ++pos_;
      } else if (data_[pos_] == '#') {
        while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string data_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::uint8_t luminance(int r, int g, int b) {
  return static_cast<std::uint8_t>((299 * r + 587 * g + 114 * b + 500) / 1000);
}

std::vector<std::uint64_t> histogram(const GrayImage& image, int bins) {
  std::vector<std::uint64_t> h(static_cast<std::size_t>(bins), 0);
  for (std::uint8_t v : image.pixels) ++h[static_cast<std::size_t>(v) * bins / 256];
  return h;
}

}  // namespace

GrayImage read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) fail(ErrorCode::NotFound, path.string() + ": not found");
    fail(ErrorCode::IoError, path.string() + ": cannot read");
  }
  PnmReader reader(std::string(std::istreambuf_iterator<char>(in), {}), path.string());

  const std::string magic = reader.magic();
  const bool ascii = magic == "P2" || magic == "P3";
  const bool color = magic == "P3" || magic == "P6";
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6") {
    reader.bad("unsupported format " + magic);
  }
  GrayImage image;
  image.width = reader.header_int();
  image.height = reader.header_int();
  const int maxval = reader.header_int();
  if (image.width <= 0 || image.height <= 0) reader.bad("empty image");
  if (maxval <= 0 || maxval > 255) reader.bad("only 8-bit images are supported");
  if (!ascii) reader.end_of_header();

  auto sample = [&] {
    const int v = ascii ? reader.header_int() : reader.raw_byte();
    if (v > maxval) reader.bad("sample exceeds maxval");
    return maxval == 255 ? v : (v * 255 + maxval / 2) / maxval;
  };
  const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
  image.pixels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (color) {
      const int r = sample();
      const int g = sample();
      const int b = sample();
      image.pixels.push_back(luminance(r, g, b));
    } else {
      image.pixels.push_back(static_cast<std::uint8_t>(sample()));
    }
  }
  return image;
}

void write_pgm(const std::filesystem::path& path, const GrayImage& image) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoError, path.string() + ": cannot write");
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.pixels.data()),
            static_cast<std::streamsize>(image.pixels.size()));
}

void IngestConfig::validate() const {
  if (!(similarity_threshold > 0.0 && similarity_threshold <= 1.0)) {
    fail(ErrorCode::InvalidArgument, "similarity_threshold must be in (0, 1]");
  }
  if (histogram_bins < 2 || histogram_bins > 256) {
    fail(ErrorCode::InvalidArgument, "histogram_bins must be in [2, 256]");
  }
  if (chunk_budget < 256) {
    fail(ErrorCode::InvalidArgument, "chunk_budget must be at least 256");
  }
  if (default_frame_interval_ms <= 0) {
    fail(ErrorCode::InvalidArgument, "default_frame_interval_ms must be positive");
  }
}

double frame_similarity(const FrameRef& a, const FrameRef& b, int bins) {
  if (!a.image || !b.image) fail(ErrorCode::InvalidArgument, "frame without image");
  const GrayImage& ia = *a.image;
  const GrayImage& ib = *b.image;
  if (ia.width != ib.width || ia.height != ib.height) {
    fail(ErrorCode::DimensionMismatch,
         "frames " + std::to_string(a.index) + " and " + std::to_string(b.index) +
             " differ in size");
  }
  if (bins < 2 || bins > 256) fail(ErrorCode::InvalidArgument, "bins must be in [2, 256]");
  if (ia.pixels.empty()) return 1.0;
  // Equal pixel counts, so the intersection of normalized histograms is the
  // intersection of raw counts over the pixel count.
  const auto ha = histogram(ia, bins);
  const auto hb = histogram(ib, bins);
  std::uint64_t shared = 0;
  for (std::size_t i = 0; i < ha.size(); ++i) shared += std::min(ha[i], hb[i]);
  return static_cast<double>(shared) / static_cast<double>(ia.pixels.size());
}

std::vector<KeyFrame> extract_keyframes(std::span<const FrameRef> frames,
                                        const IngestConfig& cfg) {
  cfg.validate();
  if (frames.empty()) fail(ErrorCode::EmptyInput, "no frames");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].timestamp_ms < 0) {
      fail(ErrorCode::InvalidArgument, "negative frame timestamp");
    }
    if (i > 0 && frames[i].index <= frames[i - 1].index) {
      fail(ErrorCode::InvalidArgument, "frame indices must strictly increase");
    }
    if (i > 0 && frames[i].timestamp_ms < frames[i - 1].timestamp_ms) {
      fail(ErrorCode::InvalidArgument, "frame timestamps must not decrease");
    }
  }

  std::vector<std::size_t> picked{0};
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const double sim =
        frame_similarity(frames[picked.back()], frames[i], cfg.histogram_bins);
    if (sim < cfg.similarity_threshold) picked.push_back(i);
  }

  std::vector<DurationMs> deltas;
  for (std::size_t i = 1; i < frames.size(); ++i) {
    const DurationMs d = frames[i].timestamp_ms - frames[i - 1].timestamp_ms;
    if (d > 0) deltas.push_back(d);
  }
  DurationMs interval = cfg.default_frame_interval_ms;
  if (!deltas.empty()) {
    std::nth_element(deltas.begin(), deltas.begin() + deltas.size() / 2, deltas.end());
    interval = deltas[deltas.size() / 2];
  }
  const TimestampMs duration = frames.back().timestamp_ms + interval;

  std::vector<KeyFrame> out;
  out.reserve(picked.size());
  for (std::size_t k = 0; k < picked.size(); ++k) {
    const FrameRef& f = frames[picked[k]];
    const TimestampMs start = k == 0 ? 0 : f.timestamp_ms;
    const TimestampMs end =
        k + 1 < picked.size() ? frames[picked[k + 1]].timestamp_ms : duration;
    out.push_back({f, start, end});
  }
  return out;
}

}  // namespace copref
