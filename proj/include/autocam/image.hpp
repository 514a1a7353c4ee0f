// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the autocam Project.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "autocam/error.hpp"

namespace autocam {

enum class Source { Real, Synthetic, Simulated };

inline std::string_view to_string(Source s) {
  switch (s) {
    case Source::Real: return "real";
    case Source::Synthetic: return "synthetic";
    case Source::Simulated: return "simulated";
  }
  return "real";
}

inline Source source_from_string(std::string_view s) {
  if (s == "real") return Source::Real;
  if (s == "synthetic") return Source::Synthetic;
  if (s == "simulated") return Source::Simulated;
  throw Error(Errc::InvalidArgument, "unknown image source '" + std::string(s) + "'");
}

/// The 2-D control point: exposure time and analog gain.
struct CameraAttributes {
  double exposure_ms = 1.0;
  double gain_db = 0.0;

  friend bool operator==(const CameraAttributes&, const CameraAttributes&) = default;
};

struct AttributeBounds {
  double t_min = 1.0;
  double t_max = 20.0;
  double g_min = 0.0;
  double g_max = 12.0;

  bool contains(const CameraAttributes& a) const {
    return a.exposure_ms >= t_min && a.exposure_ms <= t_max && a.gain_db >= g_min &&
           a.gain_db <= g_max;
  }

  void validate() const {
    if (!(t_min > 0.0) || !(t_min < t_max) || !(g_min >= 0.0) || !(g_min <= g_max)) {
      throw Error(Errc::InvalidArgument, "attribute bounds must satisfy 0 < t_min < t_max and "
                                         "0 <= g_min <= g_max");
    }
  }

  friend bool operator==(const AttributeBounds&, const AttributeBounds&) = default;
};

struct CaptureMeta {
  double exposure_ms = 1.0;
  double gain_db = 0.0;
  Source source = Source::Real;
  std::optional<double> lux;

  CameraAttributes attributes() const { return {exposure_ms, gain_db}; }

  friend bool operator==(const CaptureMeta&, const CaptureMeta&) = default;
};

/// 8-bit grayscale raster, row-major, with capture metadata.
class Image {
 public:
  static constexpr int kMinSide = 8;

  Image(int width, int height, std::vector<std::uint8_t> data, CaptureMeta meta = {})
      : width_(width), height_(height), data_(std::move(data)), meta_(std::move(meta)) {
    if (width_ < kMinSide || height_ < kMinSide) {
      throw Error(Errc::ImageTooSmall, "image must be at least 8x8, got " +
                                           std::to_string(width_) + "x" + std::to_string(height_));
    }
    if (data_.size() != static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_)) {
      throw Error(Errc::InvalidArgument, "pixel buffer length does not match width*height");
    }
  }

  /// Uniform image filled with `value`.
  static Image filled(int width, int height, std::uint8_t value, CaptureMeta meta = {}) {
    return Image(width, height,
                 std::vector<std::uint8_t>(static_cast<std::size_t>(width) * height, value),
                 std::move(meta));
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }

  std::uint8_t at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  std::uint8_t& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }

  std::span<const std::uint8_t> pixels() const noexcept { return data_; }
  std::span<std::uint8_t> pixels() noexcept { return data_; }

  const CaptureMeta& meta() const noexcept { return meta_; }
  CaptureMeta& meta() noexcept { return meta_; }

  double mean() const {
    std::uint64_t sum = 0;
    for (auto v : data_) sum += v;
    return static_cast<double>(sum) / static_cast<double>(data_.size());
  }

  friend bool operator==(const Image& a, const Image& b) {
    return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_ &&
           a.meta_ == b.meta_;
  }

 private:
  int width_;
  int height_;
  std::vector<std::uint8_t> data_;
  CaptureMeta meta_;
};

inline bool same_pixels(const Image& a, const Image& b) {
  return a.width() == b.width() && a.height() == b.height() &&
         std::ranges::equal(a.pixels(), b.pixels());
}

/// Dense per-pixel map of doubles with the dimensions of its source image.
struct ScalarMap {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// Per-pixel squared gradient magnitude on [0,1]-scaled intensities.
using GradientMap = ScalarMap;
/// Per-pixel normalized local entropy in [0,1].
using EntropyMap = ScalarMap;

/// Half-up rounding of a non-negative value into [0,255].
inline std::uint8_t quantize(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 255.0) return 255;
  return static_cast<std::uint8_t>(std::floor(v + 0.5));
}

}  // namespace autocam
