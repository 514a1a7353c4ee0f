// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the autocam Project.

// Simulated camera: a gamma-compressed sensor response with gain applied
// before digitization, gain-amplified read noise and a signal-dependent shot
// term. Serves as ground truth for the CRF fit, synthesis and control tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "autocam/camera.hpp"
#include "autocam/error.hpp"
#include "autocam/image.hpp"

namespace autocam {

struct SimulatedScene {
  std::string name;
  int width = 0;
  int height = 0;
  std::vector<double> irradiance;  // row-major, arbitrary radiometric units
  double lux_scale = 1.0;

  void validate() const {
    if (width < Image::kMinSide || height < Image::kMinSide ||
        irradiance.size() != static_cast<std::size_t>(width) * height) {
      throw Error(Errc::InvalidArgument, "scene '" + name + "' has inconsistent dimensions");
    }
    if (!(lux_scale >= 0.0) || !std::isfinite(lux_scale)) {
      throw Error(Errc::InvalidArgument, "scene '" + name + "' has an invalid lux scale");
    }
    for (double e : irradiance) {
      if (!(e >= 0.0) || !std::isfinite(e)) {
        throw Error(Errc::InvalidArgument, "scene '" + name + "' has negative or non-finite irradiance");
      }
    }
  }
};

struct SensorModel {
  double x_sat = 2000.0;  // exposure (E * lux * ms * gain) that saturates the sensor
  double gamma = 2.2;
  double read_noise_sigma = 1.5;
  double shot_noise_coeff = 0.3;
  std::uint64_t rng_seed = 0;

  void validate() const {
    if (!(x_sat > 0.0) || !(gamma > 0.0) || read_noise_sigma < 0.0 || shot_noise_coeff < 0.0) {
      throw Error(Errc::InvalidArgument, "sensor model requires x_sat > 0, gamma > 0 and "
                                         "non-negative noise parameters");
    }
  }

  /// Noise-free intensity for sensor exposure `x`, before quantization.
  double clean_intensity(double x) const {
    const double r = std::min(std::max(x, 0.0), x_sat) / x_sat;
    return 255.0 * std::pow(r, 1.0 / gamma);
  }

  /// Analytic inverse response ln X(z) of the forward model.
  double log_exposure(double z) const { return std::log(x_sat) + gamma * std::log(z / 255.0); }
};

inline double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace detail

/// One capture of `scene` at `attrs`. The noise stream is a pure function of
/// (sensor.rng_seed, counter).
inline Image simulate_capture(const SimulatedScene& scene, const SensorModel& sensor,
                              const CameraAttributes& attrs, std::uint64_t counter = 0) {
  const double amp = db_to_amplitude(attrs.gain_db);
  const double scale = scene.lux_scale * attrs.exposure_ms * amp;
  const double read_sigma = sensor.read_noise_sigma * amp;
  const bool noisy = sensor.read_noise_sigma > 0.0 || sensor.shot_noise_coeff > 0.0;

  std::mt19937_64 rng(detail::splitmix64(sensor.rng_seed) ^ detail::splitmix64(~counter));
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<std::uint8_t> data(scene.irradiance.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double clean = sensor.clean_intensity(scene.irradiance[i] * scale);
    double v = clean;
    if (noisy) {
      const double sigma = read_sigma + sensor.shot_noise_coeff * std::sqrt(clean);
      v += sigma * normal(rng);
    }
    data[i] = quantize(v);
  }
  CaptureMeta meta{attrs.exposure_ms, attrs.gain_db, Source::Simulated, scene.lux_scale};
  return Image(scene.width, scene.height, std::move(data), meta);
}

/// Camera backed by the simulator. Each capture advances the noise counter.
class SimulatedCamera : public CameraInterface {
 public:
  SimulatedCamera(SimulatedScene scene, SensorModel sensor, AttributeBounds bounds = {})
      : scene_(std::move(scene)), sensor_(sensor), bounds_(bounds) {
    scene_.validate();
    sensor_.validate();
    bounds_.validate();
  }

  Image capture(const CameraAttributes& attrs) override {
    if (!bounds_.contains(attrs)) {
      throw Error(Errc::CaptureFailed, "requested attributes lie outside the camera bounds");
    }
    return simulate_capture(scene_, sensor_, attrs, counter_++);
  }

  AttributeBounds bounds() const override { return bounds_; }

  std::uint64_t captures() const noexcept { return counter_; }
  const SimulatedScene& scene() const noexcept { return scene_; }
  const SensorModel& sensor() const noexcept { return sensor_; }

 private:
  SimulatedScene scene_;
  SensorModel sensor_;
  AttributeBounds bounds_;
  std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Scene suite

inline constexpr int kSceneWidth = 256;
inline constexpr int kSceneHeight = 192;

struct LuxLevel {
  const char* name;
  double lux;
};

inline constexpr LuxLevel kLuxLevels[] = {{"dark", 10.0}, {"indoor", 320.0}, {"bright", 1000.0}};

namespace detail {

inline double hash_unit(std::uint64_t a, std::uint64_t b) {
  return static_cast<double>(splitmix64(a * 0x100000001B3ull + b) >> 11) * 0x1.0p-53;
}

// Gray chart: 64-px cells with log-spaced reflectances, shuffled so that
// neighbouring cells differ strongly.
inline std::vector<double> checker_pattern(int w, int h) {
  constexpr int kCell = 64;
  constexpr int kLevels = 12;
  constexpr int kOrder[kLevels] = {0, 7, 3, 10, 5, 1, 8, 11, 2, 6, 9, 4};
  std::vector<double> e(static_cast<std::size_t>(w) * h);
  const int cols = (w + kCell - 1) / kCell;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int cell = (y / kCell) * cols + x / kCell;
      const double u = static_cast<double>(kOrder[cell % kLevels]) / (kLevels - 1);
      e[static_cast<std::size_t>(y) * w + x] = 0.002 * std::pow(4000.0, u);
    }
  }
  return e;
}

// Smooth log-domain ramp between a dark and a bright plateau, repeated in
// three horizontal bands of decreasing illumination.
inline std::vector<double> ramp_pattern(int w, int h) {
  constexpr double kBand[3] = {1.0, 0.3, 0.09};
  std::vector<double> e(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    const double band = kBand[std::min(2, y * 3 / h)];
    for (int x = 0; x < w; ++x) {
      const double u = std::clamp((static_cast<double>(x) / w - 0.5) * 4.0, 0.0, 1.0);
      const double s = u * u * (3.0 - 2.0 * u);
      e[static_cast<std::size_t>(y) * w + x] = band * 0.02 * std::pow(400.0, s);
    }
  }
  return e;
}

// Room of flat wall panels with a finely textured shelf, and a bright window
// showing outdoor texture.
inline std::vector<double> window_pattern(int w, int h) {
  std::vector<double> e(static_cast<std::size_t>(w) * h);
  const int x0 = w * 5 / 8, x1 = w * 15 / 16;
  const int y0 = h / 8, y1 = h * 5 / 8;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v;
      const auto bx = static_cast<std::uint64_t>(x);
      const auto by = static_cast<std::uint64_t>(y);
      if (x >= x0 && x < x1 && y >= y0 && y < y1) {
        v = 3.0 + 6.0 * hash_unit(bx / 8, by / 8 + 31);
      } else if (x < w / 2 && y >= h * 2 / 3) {
        v = 0.01 + 0.3 * hash_unit(bx / 4, by / 4 + 577);
      } else {
        v = 0.02 * std::pow(25.0, hash_unit(bx / 64, by / 64 + 977));
      }
      e[static_cast<std::size_t>(y) * w + x] = v;
    }
  }
  return e;
}

}  // namespace detail

inline std::vector<std::string> scene_names() {
  std::vector<std::string> names;
  for (const auto& lux : kLuxLevels) {
    for (const char* pattern : {"checker", "ramp", "window"}) {
      names.push_back(std::string(lux.name) + "_" + pattern);
    }
  }
  return names;
}

/// Nine deterministic scenes: {dark, indoor, bright} x {checker, ramp, window}.
inline std::vector<SimulatedScene> scene_suite() {
  const int w = kSceneWidth;
  const int h = kSceneHeight;
  const std::pair<const char*, std::vector<double>> patterns[] = {
      {"checker", detail::checker_pattern(w, h)},
      {"ramp", detail::ramp_pattern(w, h)},
      {"window", detail::window_pattern(w, h)},
  };
  std::vector<SimulatedScene> suite;
  for (const auto& lux : kLuxLevels) {
    for (const auto& [pattern, irr] : patterns) {
      suite.push_back({std::string(lux.name) + "_" + pattern, w, h, irr, lux.lux});
    }
  }
  return suite;
}

inline SimulatedScene find_scene(const std::string& name) {
  for (auto& s : scene_suite()) {
    if (s.name == name) return s;
  }
  throw Error(Errc::InvalidArgument, "unknown scene '" + name + "'");
}

}  // namespace autocam
