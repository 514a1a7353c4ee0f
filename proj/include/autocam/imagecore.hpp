// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the autocam Project.

// Low-level image statistics shared by the metric, CRF and simulator code:
// Sobel gradients, windowed histogram entropy, patch moments and box
// down-sampling. Every function here is pure and allocation-bounded by the
// input size.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "autocam/error.hpp"
#include "autocam/image.hpp"

namespace autocam {

inline constexpr int kEntropyBins = 16;

namespace detail {

inline int clamp_index(int i, int n) { return i < 0 ? 0 : (i >= n ? n - 1 : i); }

// c * log2(c) for every count a 15x15 window can produce.
inline const std::array<double, 226>& xlog2x_table() {
  static const std::array<double, 226> table = [] {
    std::array<double, 226> t{};
    for (std::size_t c = 1; c < t.size(); ++c) {
      const double x = static_cast<double>(c);
      t[c] = x * std::log2(x);
    }
    return t;
  }();
  return table;
}

}  // namespace detail

/// Squared Sobel gradient magnitude on intensities scaled to [0,1], with
/// replicate-edge padding so the map has the image's dimensions.
inline GradientMap gradient_magnitude_sq(const Image& img) {
  const int w = img.width();
  const int h = img.height();
  GradientMap out{w, h, std::vector<double>(static_cast<std::size_t>(w) * h)};
  constexpr double kScale = 1.0 / 255.0;

  for (int y = 0; y < h; ++y) {
    const int ym = detail::clamp_index(y - 1, h);
    const int yp = detail::clamp_index(y + 1, h);
    for (int x = 0; x < w; ++x) {
      const int xm = detail::clamp_index(x - 1, w);
      const int xp = detail::clamp_index(x + 1, w);
      const int a = img.at(xm, ym), b = img.at(x, ym), c = img.at(xp, ym);
      const int d = img.at(xm, y), f = img.at(xp, y);
      const int g = img.at(xm, yp), k = img.at(x, yp), l = img.at(xp, yp);
      const double gx = static_cast<double>((c + 2 * f + l) - (a + 2 * d + g)) * kScale;
      const double gy = static_cast<double>((g + 2 * k + l) - (a + 2 * b + c)) * kScale;
      out.values[static_cast<std::size_t>(y) * w + x] = gx * gx + gy * gy;
    }
  }
  return out;
}

/// Shannon entropy of a 16-bin histogram with `total` samples, normalized by
/// log2(16) so the result lies in [0,1].
inline double normalized_histogram_entropy(std::span<const int, kEntropyBins> counts, int total) {
  if (total <= 0) return 0.0;
  const auto& xlx = detail::xlog2x_table();
  double acc = 0.0;
  for (int c : counts) {
    if (c > 0) {
      acc += c < static_cast<int>(xlx.size()) ? xlx[c] : c * std::log2(static_cast<double>(c));
    }
  }
  const double n = static_cast<double>(total);
  const double h = std::log2(n) - acc / n;
  return h <= 0.0 ? 0.0 : h / std::log2(static_cast<double>(kEntropyBins));
}

/// Histogram entropy over a `window` x `window` neighbourhood of every pixel.
/// Intensities fall into 16 bins of width 16; borders replicate the edge.
inline EntropyMap local_entropy(const Image& img, int window) {
  if (window < 3 || window > 15 || window % 2 == 0) {
    throw Error(Errc::InvalidArgument, "entropy window must be odd and within [3,15]");
  }
  const int w = img.width();
  const int h = img.height();
  const int r = window / 2;
  const int total = window * window;

  std::vector<std::uint8_t> bins(img.size());
  for (std::size_t i = 0; i < bins.size(); ++i) bins[i] = img.pixels()[i] >> 4;

  // Column index lookups with the replicate border folded in.
  std::vector<int> xs(static_cast<std::size_t>(w + 2 * r));
  for (int i = 0; i < w + 2 * r; ++i) xs[i] = detail::clamp_index(i - r, w);

  EntropyMap out{w, h, std::vector<double>(img.size())};
  std::array<int, kEntropyBins> counts{};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      counts.fill(0);
      for (int dy = -r; dy <= r; ++dy) {
        const std::uint8_t* row = bins.data() + static_cast<std::size_t>(detail::clamp_index(y + dy, h)) * w;
        for (int dx = 0; dx < window; ++dx) ++counts[row[xs[x + dx]]];
      }
      out.values[static_cast<std::size_t>(y) * w + x] =
          normalized_histogram_entropy(std::span<const int, kEntropyBins>(counts), total);
    }
  }
  return out;
}

struct PatchStat {
  double mean = 0.0;
  double stddev = 0.0;
};

/// Population mean and standard deviation of every full, non-overlapping
/// `patch` x `patch` block in row-major order. Partial border blocks are dropped.
inline std::vector<PatchStat> patch_stats(const Image& img, int patch) {
  if (patch < 4) throw Error(Errc::InvalidArgument, "patch size must be >= 4");
  const int px = img.width() / patch;
  const int py = img.height() / patch;
  if (px == 0 || py == 0) {
    throw Error(Errc::ImageTooSmall, "no full " + std::to_string(patch) + "x" +
                                         std::to_string(patch) + " patch fits the image");
  }
  const double n = static_cast<double>(patch) * patch;
  std::vector<PatchStat> out;
  out.reserve(static_cast<std::size_t>(px) * py);
  for (int by = 0; by < py; ++by) {
    for (int bx = 0; bx < px; ++bx) {
      std::int64_t sum = 0;
      std::int64_t sum_sq = 0;
      for (int y = by * patch; y < (by + 1) * patch; ++y) {
        for (int x = bx * patch; x < (bx + 1) * patch; ++x) {
          const int v = img.at(x, y);
          sum += v;
          sum_sq += v * v;
        }
      }
      const double mean = static_cast<double>(sum) / n;
      // Integer sums keep the variance exact before the final division.
      const double var = static_cast<double>(sum_sq * static_cast<std::int64_t>(n) - sum * sum) / (n * n);
      out.push_back({mean, std::sqrt(var > 0.0 ? var : 0.0)});
    }
  }
  return out;
}

/// Box-filter down-sampling by an integer factor. Result dimensions are
/// floor-divided; each output pixel is the half-up rounded block mean.
inline Image downsample(const Image& img, int factor) {
  if (factor < 1) throw Error(Errc::InvalidArgument, "downsample factor must be >= 1");
  if (factor == 1) return img;
  const int w = img.width() / factor;
  const int h = img.height() / factor;
  if (w < Image::kMinSide || h < Image::kMinSide) {
    throw Error(Errc::ImageTooSmall, "downsampled image would be smaller than 8x8");
  }
  const std::int64_t n = static_cast<std::int64_t>(factor) * factor;
  std::vector<std::uint8_t> data(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::int64_t sum = 0;
      for (int yy = y * factor; yy < (y + 1) * factor; ++yy) {
        for (int xx = x * factor; xx < (x + 1) * factor; ++xx) sum += img.at(xx, yy);
      }
      data[static_cast<std::size_t>(y) * w + x] = static_cast<std::uint8_t>((2 * sum + n) / (2 * n));
    }
  }
  return Image(w, h, std::move(data), img.meta());
}

}  // namespace autocam
