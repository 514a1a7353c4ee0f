// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the autocam Project.

// Noise- and entropy-weighted gradient (NEWG) image information metric.
//
//   NEWG = EWG - G_k / kappa
//   EWG  = sum_i W_i |grad I(i)|^2 + pi(H_i) M_i W_i meanGrad
//   G_k  = (1 - snr/snr_ref) * meanGrad * N
//
// W_i and H_i are the normalized local entropy, pi is a logistic activation,
// M_i is -1 on saturated pixels and 0 elsewhere, and snr is a single per-image
// value in dB taken from the median patch mean/stddev ratio.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "autocam/error.hpp"
#include "autocam/image.hpp"
#include "autocam/imagecore.hpp"

namespace autocam {

struct MetricConfig {
  double kappa = 5.0;
  double snr_ref_db = 20.0;
  int sat_high = 250;
  int sat_low = 5;
  int entropy_window = 5;
  double activation_steepness = 20.0;
  double activation_center = 0.5;
  int snr_patch = 16;

  void validate() const {
    if (!(kappa > 0.0)) throw Error(Errc::InvalidArgument, "kappa must be > 0");
    if (!(snr_ref_db > 0.0)) throw Error(Errc::InvalidArgument, "snr_ref_db must be > 0");
    if (sat_low < 0 || sat_low >= sat_high || sat_high > 255) {
      throw Error(Errc::InvalidArgument, "saturation thresholds must satisfy 0 <= low < high <= 255");
    }
    if (activation_center < 0.0 || activation_center > 1.0) {
      throw Error(Errc::InvalidArgument, "activation_center must lie in [0,1]");
    }
    if (entropy_window < 3 || entropy_window > 15 || entropy_window % 2 == 0) {
      throw Error(Errc::InvalidArgument, "entropy_window must be odd and within [3,15]");
    }
    if (snr_patch < 4) throw Error(Errc::InvalidArgument, "snr_patch must be >= 4");
  }
};

struct MetricScore {
  double g_t = 0.0;  // EWG
  double g_k = 0.0;  // SNR penalty
  double newg = 0.0;
  double snr_db = 0.0;
  double mean_grad = 0.0;
};

inline bool is_saturated(std::uint8_t z, const MetricConfig& cfg) {
  return z >= cfg.sat_high || z <= cfg.sat_low;
}

inline double activation(double h, const MetricConfig& cfg) {
  return 1.0 / (1.0 + std::exp(-cfg.activation_steepness * (h - cfg.activation_center)));
}

inline double mean_gradient(const GradientMap& grad) {
  double sum = 0.0;
  for (double v : grad.values) sum += v;
  return sum / static_cast<double>(grad.values.size());
}

/// 20*log10 of the median patch mean/stddev ratio. Patches darker than 1 and
/// patches whose mean sits at or above the saturation threshold are ignored;
/// stddev is floored at 1e-3. With no usable patch the reference SNR is
/// returned so the penalty vanishes.
inline double image_snr_db(const Image& img, const MetricConfig& cfg) {
  const auto stats = patch_stats(img, cfg.snr_patch);
  std::vector<double> ratios;
  ratios.reserve(stats.size());
  for (const auto& s : stats) {
    if (s.mean < 1.0 || s.mean >= cfg.sat_high) continue;
    ratios.push_back(s.mean / std::max(s.stddev, 1e-3));
  }
  if (ratios.empty()) return cfg.snr_ref_db;
  std::sort(ratios.begin(), ratios.end());
  const std::size_t n = ratios.size();
  const double median = n % 2 == 1 ? ratios[n / 2] : 0.5 * (ratios[n / 2 - 1] + ratios[n / 2]);
  return 20.0 * std::log10(median);
}

namespace detail {

inline double ewg_from_maps(const Image& img, const GradientMap& grad, const EntropyMap& ent,
                            double mean_grad, const MetricConfig& cfg) {
  double total = 0.0;
  const auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    const double w = ent.values[i];
    double term = w * grad.values[i];
    if (is_saturated(px[i], cfg)) term -= activation(ent.values[i], cfg) * w * mean_grad;
    total += term;
  }
  return total;
}

inline double snr_penalty_from(double snr_db, double mean_grad, std::size_t n,
                               const MetricConfig& cfg) {
  return (1.0 - snr_db / cfg.snr_ref_db) * mean_grad * static_cast<double>(n);
}

}  // namespace detail

/// Entropy-weighted gradient with saturation compensation (G_t).
inline double ewg(const Image& img, const MetricConfig& cfg) {
  const auto grad = gradient_magnitude_sq(img);
  const auto ent = local_entropy(img, cfg.entropy_window);
  return detail::ewg_from_maps(img, grad, ent, mean_gradient(grad), cfg);
}

/// SNR penalty (G_k). Negative when the image SNR exceeds the reference.
inline double snr_penalty(const Image& img, const MetricConfig& cfg) {
  const auto grad = gradient_magnitude_sq(img);
  return detail::snr_penalty_from(image_snr_db(img, cfg), mean_gradient(grad), img.size(), cfg);
}

inline MetricScore newg(const Image& img, const MetricConfig& cfg) {
  const auto grad = gradient_magnitude_sq(img);
  const auto ent = local_entropy(img, cfg.entropy_window);
  MetricScore s;
  s.mean_grad = mean_gradient(grad);
  s.snr_db = image_snr_db(img, cfg);
  s.g_t = detail::ewg_from_maps(img, grad, ent, s.mean_grad, cfg);
  s.g_k = detail::snr_penalty_from(s.snr_db, s.mean_grad, img.size(), cfg);
  s.newg = s.g_t - s.g_k / cfg.kappa;
  return s;
}

}  // namespace autocam
