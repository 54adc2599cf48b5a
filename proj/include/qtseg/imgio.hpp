#pragma once

#include <array>
#include <cctype>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "qtseg/error.hpp"

namespace qtseg {

using Bytes = std::vector<std::uint8_t>;

/// Axis-aligned pixel rectangle, top-left inclusive.
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int w = 0;
  int h = 0;

  std::int64_t area() const noexcept { return std::int64_t{w} * h; }
  bool operator==(const Rect&) const = default;
};

/// 8-bit single-channel image, row-major with top-left origin.
class GrayImage {
 public:
  GrayImage() = default;

  GrayImage(int width, int height, std::uint8_t fill = 0)
      : GrayImage(width, height, std::vector<std::uint8_t>(checked_size(width, height), fill)) {}

  GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
      : width_(width), height_(height), pixels_(std::move(pixels)) {
    if (pixels_.size() != checked_size(width, height)) {
      throw Error(ErrorCategory::InvalidArgument, "pixel buffer does not match width x height");
    }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }
  Rect bounds() const noexcept { return {0, 0, width_, height_}; }

  std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
  std::uint8_t& at(int x, int y) { return pixels_[index(x, y)]; }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  bool operator==(const GrayImage&) const = default;

 private:
  static std::size_t checked_size(int width, int height) {
    if (width <= 0 || height <= 0) {
      throw Error(ErrorCategory::InvalidArgument, "image dimensions must be positive");
    }
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Gray-level counts over a region.
struct Histogram256 {
  std::array<std::int64_t, 256> counts{};

  std::int64_t total() const noexcept {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
  }

  Histogram256& operator+=(const Histogram256& other) noexcept {
    for (std::size_t g = 0; g < counts.size(); ++g) counts[g] += other.counts[g];
    return *this;
  }

  bool operator==(const Histogram256&) const = default;
};

inline bool contains(const GrayImage& img, const Rect& r) noexcept {
  return r.w >= 1 && r.h >= 1 && r.x0 >= 0 && r.y0 >= 0 &&
         std::int64_t{r.x0} + r.w <= img.width() && std::int64_t{r.y0} + r.h <= img.height();
}

inline Histogram256 region_histogram(const GrayImage& img, const Rect& r) {
  if (!contains(img, r)) {
    throw Error(ErrorCategory::RectOutOfBounds,
                "rect (" + std::to_string(r.x0) + "," + std::to_string(r.y0) + "," + std::to_string(r.w) +
                    "," + std::to_string(r.h) + ") exceeds image bounds");
  }
  Histogram256 hist;
  const auto px = img.pixels();
  for (int y = r.y0; y < r.y0 + r.h; ++y) {
    const auto row = px.subspan(static_cast<std::size_t>(y) * img.width() + r.x0, static_cast<std::size_t>(r.w));
    for (std::uint8_t v : row) ++hist.counts[v];
  }
  return hist;
}

namespace detail {

class PgmCursor {
 public:
  explicit PgmCursor(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  // Unsigned decimal token; `what` names the field for the error message.
  std::int64_t read_uint(ErrorCategory on_error, const char* what) {
    skip_space_and_comments();
    std::int64_t value = 0;
    std::size_t digits = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_] - '0');
      if (value > (std::int64_t{1} << 40)) throw Error(on_error, std::string(what) + " is too large");
      ++pos_;
      ++digits;
    }
    if (digits == 0) throw Error(on_error, std::string("expected numeric ") + what);
    if (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#') {
      throw Error(on_error, std::string("non-numeric character in ") + what);
    }
    return value;
  }

  bool at_end() const noexcept { return pos_ >= bytes_.size(); }
  std::size_t pos() const noexcept { return pos_; }
  void advance(std::size_t n) noexcept { pos_ += n; }
  std::span<const std::uint8_t> rest() const noexcept { return bytes_.subspan(pos_); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/// Parses binary (P5) or ASCII (P2) PGM with maxval <= 255. Pixel values are
/// kept as stored; no rescaling to 255 is applied.
inline GrayImage load_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) {
    throw Error(ErrorCategory::MalformedHeader, "bad magic, expected P5 or P2");
  }
  const bool binary = bytes[1] == '5';
  detail::PgmCursor cur(bytes);
  cur.advance(2);
  if (!cur.at_end() && !std::isspace(bytes[2]) && bytes[2] != '#') {
    throw Error(ErrorCategory::MalformedHeader, "bad magic, expected P5 or P2");
  }

  const auto width = cur.read_uint(ErrorCategory::MalformedHeader, "width");
  const auto height = cur.read_uint(ErrorCategory::MalformedHeader, "height");
  const auto maxval = cur.read_uint(ErrorCategory::MalformedHeader, "maxval");
  if (width <= 0 || height <= 0 || width > (1 << 20) || height > (1 << 20)) {
    throw Error(ErrorCategory::MalformedHeader, "image dimensions out of range");
  }
  if (maxval == 0) throw Error(ErrorCategory::MalformedHeader, "maxval must be positive");
  if (maxval > 255) throw Error(ErrorCategory::UnsupportedMaxval, "maxval " + std::to_string(maxval) + " > 255");

  const auto count = static_cast<std::size_t>(width * height);
  std::vector<std::uint8_t> pixels;
  pixels.reserve(count);

  if (binary) {
    // Exactly one whitespace byte separates the header from the raster.
    if (cur.at_end()) throw Error(ErrorCategory::TruncatedData, "missing raster");
    cur.advance(1);
    const auto raster = cur.rest();
    if (raster.size() < count) {
      throw Error(ErrorCategory::TruncatedData,
                  "expected " + std::to_string(count) + " pixel bytes, got " + std::to_string(raster.size()));
    }
    pixels.assign(raster.begin(), raster.begin() + static_cast<std::ptrdiff_t>(count));
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      cur.skip_space_and_comments();
      if (cur.at_end()) {
        throw Error(ErrorCategory::TruncatedData,
                    "expected " + std::to_string(count) + " samples, got " + std::to_string(i));
      }
      const auto v = cur.read_uint(ErrorCategory::MalformedHeader, "sample");
      if (v > maxval) throw Error(ErrorCategory::MalformedHeader, "sample exceeds maxval");
      pixels.push_back(static_cast<std::uint8_t>(v));
    }
  }
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(pixels));
}

/// Canonical P5: "P5\n<w> <h>\n255\n" followed by the raw raster.
inline Bytes save_pgm(const GrayImage& img) {
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  Bytes out(header.begin(), header.end());
  const auto px = img.pixels();
  out.insert(out.end(), px.begin(), px.end());
  return out;
}

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::IoError, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCategory::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCategory::IoError, "write failed for " + path.string());
}

inline void write_file(const std::filesystem::path& path, std::string_view text) {
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace qtseg
