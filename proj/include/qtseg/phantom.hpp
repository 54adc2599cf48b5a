#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "qtseg/error.hpp"
#include "qtseg/imgio.hpp"

namespace qtseg {

struct PhantomShape {
  enum class Kind { Ellipse, Rectangle };
  Kind kind = Kind::Ellipse;
  double cx = 0.0;
  double cy = 0.0;
  // Ellipse radii, or half-extent of a rectangle.
  double rx = 0.0;
  double ry = 0.0;
  int intensity = 255;

  bool contains(double x, double y) const noexcept {
    const double dx = x - cx;
    const double dy = y - cy;
    if (kind == Kind::Rectangle) return std::abs(dx) <= rx && std::abs(dy) <= ry;
    return (dx * dx) / (rx * rx) + (dy * dy) / (ry * ry) <= 1.0;
  }
};

/// Synthetic test image with exact ground truth.
struct PhantomSpec {
  int width = 256;
  int height = 256;
  int background = 0;
  std::vector<PhantomShape> shapes;
  double gradient = 0.0;     // additive ramp, 0 at top-left to `gradient` at bottom-right
  double noise_sigma = 0.0;  // Gaussian noise, gray levels
  std::uint64_t seed = 0;

  void validate() const {
    if (width <= 0 || height <= 0 || width > (1 << 16) || height > (1 << 16)) {
      throw Error(ErrorCategory::InvalidSpec, "phantom dimensions out of range");
    }
    if (background < 0 || background > 255) throw Error(ErrorCategory::InvalidSpec, "background outside [0, 255]");
    if (!std::isfinite(gradient)) throw Error(ErrorCategory::InvalidSpec, "gradient must be finite");
    if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma)) {
      throw Error(ErrorCategory::InvalidSpec, "noise_sigma must be finite and nonnegative");
    }
    for (const auto& s : shapes) {
      if (s.intensity < 0 || s.intensity > 255) throw Error(ErrorCategory::InvalidSpec, "shape intensity outside [0, 255]");
      if (!(s.rx > 0.0) || !(s.ry > 0.0) || !std::isfinite(s.rx) || !std::isfinite(s.ry)) {
        throw Error(ErrorCategory::InvalidSpec, "shape extent must be positive");
      }
      if (!std::isfinite(s.cx) || !std::isfinite(s.cy)) throw Error(ErrorCategory::InvalidSpec, "shape center must be finite");
    }
  }
};

/// Standard normal variates from std::mt19937_64 via the Box-Muller
/// transform. mt19937_64 output is fixed by the C++ standard, and uniforms are
/// formed from the top 53 bits, so sequences are reproducible across
/// platforms (up to libm rounding in log/sin/cos).
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}

  double uniform_open() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_open();
    const double u2 = uniform_open();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

struct Phantom {
  GrayImage image;
  GrayImage truth;  // 255 inside any shape, 0 elsewhere
};

/// Later shapes paint over earlier ones. Noise is drawn per pixel in
/// row-major order only when noise_sigma > 0.
inline Phantom generate_phantom(const PhantomSpec& spec) {
  spec.validate();
  Phantom out{GrayImage(spec.width, spec.height, 0), GrayImage(spec.width, spec.height, 0)};
  GaussianSource noise(spec.seed);
  const double diag = static_cast<double>(spec.width - 1 + spec.height - 1);
  for (int y = 0; y < spec.height; ++y) {
    for (int x = 0; x < spec.width; ++x) {
      double value = spec.background;
      bool inside = false;
      for (const auto& s : spec.shapes) {
        if (s.contains(x, y)) {
          value = s.intensity;
          inside = true;
        }
      }
      if (diag > 0.0) value += spec.gradient * static_cast<double>(x + y) / diag;
      if (spec.noise_sigma > 0.0) value += spec.noise_sigma * noise.next();
      out.image.at(x, y) = static_cast<std::uint8_t>(std::clamp(std::round(value), 0.0, 255.0));
      out.truth.at(x, y) = inside ? 255 : 0;
    }
  }
  return out;
}

/// distortion: fraction of pixels whose label differs from the truth.
/// reliability: Dice overlap of the foreground (255) sets; 1 when both are empty.
struct SegMetrics {
  double distortion = 0.0;
  double reliability = 1.0;
  std::int64_t pixels = 0;
  std::int64_t mismatched = 0;
  std::int64_t true_positive = 0;
  std::int64_t predicted_foreground = 0;
  std::int64_t truth_foreground = 0;
};

inline SegMetrics compute_metrics(const GrayImage& mask, const GrayImage& truth) {
  if (mask.width() != truth.width() || mask.height() != truth.height()) {
    throw Error(ErrorCategory::DimensionMismatch, "mask and truth dimensions differ");
  }
  SegMetrics m;
  const auto a = mask.pixels();
  const auto b = truth.pixels();
  m.pixels = static_cast<std::int64_t>(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] != 0 && a[i] != 255) || (b[i] != 0 && b[i] != 255)) {
      throw Error(ErrorCategory::NonBinaryInput, "pixel value other than 0 or 255 at index " + std::to_string(i));
    }
    const bool pa = a[i] == 255;
    const bool pb = b[i] == 255;
    m.mismatched += pa != pb;
    m.true_positive += pa && pb;
    m.predicted_foreground += pa;
    m.truth_foreground += pb;
  }
  m.distortion = m.pixels > 0 ? static_cast<double>(m.mismatched) / static_cast<double>(m.pixels) : 0.0;
  const auto denom = m.predicted_foreground + m.truth_foreground;
  m.reliability = denom > 0 ? 2.0 * static_cast<double>(m.true_positive) / static_cast<double>(denom) : 1.0;
  return m;
}

}  // namespace qtseg
