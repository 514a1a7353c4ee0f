// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the autocam Project.

// Inverse camera response g(z) = ln(E * dt) recovered from an exposure stack
// (Debevec-Malik least squares with a second-difference smoothness prior),
// and image synthesis at arbitrary exposure/gain from a seed capture.
//
// Synthesis scales the seed's sensor exposure E*dt = exp(g(z)) by
// K_synth = K_t * K_g and maps the result back through g^-1:
//
//   K_t = (alpha (dt_s - dt_o) + e_o) / e_o,   e_o = exp(g(I_o))
//   K_g = 7.01^((gain_s - gain_o) / 20)
//   z'  = g^-1(g(z) + ln K_synth)
//
// alpha is the slope of exp(g(mean intensity)) between the two boundary
// captures of the stack, taken over pixels valid in both.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "autocam/error.hpp"
#include "autocam/image.hpp"

namespace autocam {

/// Base of the gain scale factor, (10 / F_n) with F_n ~ sqrt(2), as published.
inline constexpr double kGainScaleBase = 7.01;

struct SeedRef {
  double exposure_ms = 0.0;
  double mean_intensity = 0.0;
};

struct CrfFitOptions {
  double lambda_smooth = 50.0;
  int n_samples = 64;
  double max_isotonic_shift = 0.5;
  // Pixels outside (valid_low, valid_high) are excluded from the alpha means.
  int valid_low = 5;
  int valid_high = 250;
  double min_table_value = 0.5;
  bool exclude_clipped = false;
};

class InverseCrf {
 public:
  std::array<double, 256> g_table{};
  double alpha = 0.0;  // d(E*dt)/d(dt) in exp(g) units per ms
  double ln_e = 0.0;
  double lambda_smooth = 0.0;
  double gain_db = 0.0;
  std::vector<SeedRef> seed_refs;

  /// g at a fractional intensity, linear between table nodes.
  double g(double z) const {
    if (z <= 0.0) return g_table.front();
    if (z >= 255.0) return g_table.back();
    const int lo = static_cast<int>(std::floor(z));
    const double t = z - lo;
    return t == 0.0 ? g_table[lo] : g_table[lo] + t * (g_table[lo + 1] - g_table[lo]);
  }

  /// Continuous g^-1: binary search over the monotone table with linear
  /// interpolation, clamped to [0,255]. Exact on table nodes.
  double inverse(double v) const {
    if (!(v > g_table.front())) return 0.0;
    if (v >= g_table.back()) return 255.0;
    const auto it = std::lower_bound(g_table.begin(), g_table.end(), v);
    const int hi = static_cast<int>(it - g_table.begin());
    if (*it == v) return hi;
    const int lo = hi - 1;
    return lo + (v - g_table[lo]) / (g_table[hi] - g_table[lo]);
  }

  std::uint8_t inverse_quantized(double v) const { return quantize(inverse(v)); }

  bool strictly_increasing() const {
    for (std::size_t i = 1; i < g_table.size(); ++i) {
      if (!(g_table[i] > g_table[i - 1])) return false;
    }
    return true;
  }
};

struct ScaleFactor {
  double k_t = 1.0;
  double k_g = 1.0;
  double k_synth = 1.0;
};

namespace detail {

inline double hat_weight(int z) { return std::min(z, 255 - z) + 1.0; }

/// Pool-adjacent-violators projection onto non-decreasing sequences.
inline std::vector<double> isotonic_projection(std::span<const double> y) {
  struct Block {
    double sum;
    int count;
  };
  std::vector<Block> blocks;
  blocks.reserve(y.size());
  for (double v : y) {
    blocks.push_back({v, 1});
    while (blocks.size() > 1) {
      const Block& b = blocks.back();
      const Block& a = blocks[blocks.size() - 2];
      if (a.sum / a.count <= b.sum / b.count) break;
      const Block merged{a.sum + b.sum, a.count + b.count};
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.sum / b.count);
  return out;
}

struct SampleGrid {
  std::vector<std::size_t> offsets;
};

inline SampleGrid uniform_sample_grid(int width, int height, int n_samples) {
  const double aspect = static_cast<double>(width) / height;
  int ny = std::max(1, static_cast<int>(std::lround(std::sqrt(n_samples / aspect))));
  ny = std::min(ny, height);
  int nx = std::min(width, (n_samples + ny - 1) / ny);
  SampleGrid grid;
  for (int j = 0; j < ny; ++j) {
    const int y = static_cast<int>((j + 0.5) * height / ny);
    for (int i = 0; i < nx; ++i) {
      const int x = static_cast<int>((i + 0.5) * width / nx);
      grid.offsets.push_back(static_cast<std::size_t>(y) * width + x);
    }
  }
  return grid;
}

}  // namespace detail

/// Mean intensity over the pixels of `img` flagged in `mask`.
inline double masked_mean(const Image& img, std::span<const std::uint8_t> mask) {
  std::uint64_t sum = 0;
  std::uint64_t n = 0;
  const auto px = img.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (mask[i]) {
      sum += px[i];
      ++n;
    }
  }
  return n == 0 ? img.mean() : static_cast<double>(sum) / static_cast<double>(n);
}

/// Fits the inverse CRF from images of one scene at distinct exposures and a
/// common gain. Images are sorted by exposure internally.
inline InverseCrf fit_inverse_crf(std::span<const Image> stack, const CrfFitOptions& opt = {}) {
  if (stack.size() < 2) throw Error(Errc::InvalidArgument, "CRF fit needs at least two images");
  if (opt.n_samples < 32) throw Error(Errc::InvalidArgument, "CRF fit needs n_samples >= 32");
  if (!(opt.lambda_smooth > 0.0)) throw Error(Errc::InvalidArgument, "lambda_smooth must be > 0");

  std::vector<const Image*> imgs;
  for (const auto& im : stack) imgs.push_back(&im);
  std::sort(imgs.begin(), imgs.end(), [](const Image* a, const Image* b) {
    return a->meta().exposure_ms < b->meta().exposure_ms;
  });
  const int w = imgs.front()->width();
  const int h = imgs.front()->height();
  for (std::size_t j = 0; j < imgs.size(); ++j) {
    const auto& m = imgs[j]->meta();
    if (imgs[j]->width() != w || imgs[j]->height() != h) {
      throw Error(Errc::InvalidArgument, "CRF stack images must share dimensions");
    }
    if (m.gain_db != imgs.front()->meta().gain_db) {
      throw Error(Errc::InvalidArgument, "CRF stack images must share one gain");
    }
    if (!(m.exposure_ms > 0.0)) throw Error(Errc::InvalidArgument, "exposures must be positive");
    if (j > 0 && !(m.exposure_ms > imgs[j - 1]->meta().exposure_ms)) {
      throw Error(Errc::InvalidArgument, "CRF stack exposures must be distinct");
    }
  }
  bool all_same = true;
  for (std::size_t j = 1; j < imgs.size() && all_same; ++j) {
    all_same = same_pixels(*imgs[j], *imgs.front());
  }
  if (all_same) throw Error(Errc::DegenerateStack, "all stack images are identical");

  const auto grid = detail::uniform_sample_grid(w, h, opt.n_samples);
  const int n_pts = static_cast<int>(grid.offsets.size());
  const int n_img = static_cast<int>(imgs.size());

  bool informative = false;
  for (auto off : grid.offsets) {
    for (int j = 1; j < n_img; ++j) {
      if (imgs[j]->pixels()[off] != imgs[0]->pixels()[off]) informative = true;
    }
  }
  if (!informative) {
    throw Error(Errc::DegenerateStack, "sampled pixels do not change across the stack");
  }

  // Least squares over g(0..255) and ln E per sample. The ln E unknowns only
  // couple to g through their own rows, so they are eliminated exactly
  // (Schur complement) and the 256x256 normal system is solved directly.
  Eigen::MatrixXd ata = Eigen::MatrixXd::Zero(256, 256);
  Eigen::VectorXd atb = Eigen::VectorXd::Zero(256);
  std::vector<double> uu(n_pts, 0.0);  // sum of squared weights per sample
  std::vector<double> ub(n_pts, 0.0);  // rhs for ln E_i
  std::vector<std::vector<std::pair<int, double>>> ug(n_pts);  // (z, w^2) couplings
  for (int i = 0; i < n_pts; ++i) {
    for (int j = 0; j < n_img; ++j) {
      const int z = imgs[j]->pixels()[grid.offsets[i]];
      if (opt.exclude_clipped && (z == 0 || z == 255)) continue;
      const double w2 = detail::hat_weight(z) * detail::hat_weight(z);
      const double lt = std::log(imgs[j]->meta().exposure_ms);
      ata(z, z) += w2;
      atb(z) += w2 * lt;
      uu[i] += w2;
      ub[i] -= w2 * lt;
      ug[i].emplace_back(z, w2);
    }
  }
  ata(128, 128) += 1.0;  // gauge g(128) = 0
  for (int z = 1; z < 255; ++z) {
    const double wz = opt.lambda_smooth * detail::hat_weight(z);
    const int idx[3] = {z - 1, z, z + 1};
    const double c[3] = {wz, -2.0 * wz, wz};
    for (int p = 0; p < 3; ++p) {
      for (int q = 0; q < 3; ++q) ata(idx[p], idx[q]) += c[p] * c[q];
    }
  }
  for (int i = 0; i < n_pts; ++i) {
    if (uu[i] == 0.0) continue;
    // Row of A_gu for sample i is -w^2 at each observed z.
    for (const auto& [za, wa] : ug[i]) {
      atb(za) += wa * ub[i] / uu[i];
      for (const auto& [zb, wb] : ug[i]) ata(za, zb) -= wa * wb / uu[i];
    }
  }

  const Eigen::LDLT<Eigen::MatrixXd> ldlt(ata);
  if (ldlt.info() != Eigen::Success) {
    throw Error(Errc::DegenerateStack, "CRF least-squares system is singular");
  }
  const Eigen::VectorXd gsol = ldlt.solve(atb);
  if (!gsol.allFinite()) throw Error(Errc::DegenerateStack, "CRF least-squares system is singular");

  std::vector<double> ln_e_samples;
  for (int i = 0; i < n_pts; ++i) {
    if (uu[i] == 0.0) continue;
    double acc = -ub[i];
    for (const auto& [z, w2] : ug[i]) acc -= w2 * gsol(z);
    ln_e_samples.push_back(-acc / uu[i]);
  }

  std::vector<double> raw(256);
  for (int z = 0; z < 256; ++z) raw[z] = gsol(z);
  auto iso = detail::isotonic_projection(raw);
  for (int z = 0; z < 256; ++z) {
    if (std::abs(iso[z] - raw[z]) > opt.max_isotonic_shift) {
      throw Error(Errc::NonMonotoneFit, "isotonic projection moved g(" + std::to_string(z) +
                                            ") by more than the allowed shift");
    }
  }
  // Break pooled ties so the table is strictly increasing.
  for (int z = 1; z < 256; ++z) iso[z] = std::max(iso[z], iso[z - 1] + 1e-6);

  InverseCrf crf;
  double ln_e = 0.0;
  for (double v : ln_e_samples) ln_e += v;
  if (!ln_e_samples.empty()) ln_e /= static_cast<double>(ln_e_samples.size());

  const double shift = std::max(0.0, opt.min_table_value - iso.front());
  for (int z = 0; z < 256; ++z) crf.g_table[z] = iso[z] + shift;
  for (double v : crf.g_table) {
    if (!std::isfinite(v)) throw Error(Errc::DegenerateStack, "CRF fit produced non-finite values");
  }
  crf.ln_e = ln_e + shift;
  crf.lambda_smooth = opt.lambda_smooth;
  crf.gain_db = imgs.front()->meta().gain_db;

  // Pixels usable in both boundary captures define the reference means. The
  // upper clip test uses the value predicted from the short exposure: testing
  // the noisy long exposure directly drops bright noise and biases its mean.
  const Image& lo = *imgs.front();
  const Image& hi = *imgs.back();
  const double g_clip = crf.g(opt.valid_high) - std::log(hi.meta().exposure_ms / lo.meta().exposure_ms);
  std::vector<std::uint8_t> mask(lo.size());
  for (std::size_t p = 0; p < mask.size(); ++p) {
    const int zl = lo.pixels()[p];
    const int zh = hi.pixels()[p];
    mask[p] = zl > opt.valid_low && crf.g_table[zl] < g_clip && zh > opt.valid_low;
  }
  for (const Image* im : imgs) crf.seed_refs.push_back({im->meta().exposure_ms, masked_mean(*im, mask)});

  const double e_lo = std::exp(crf.g(crf.seed_refs.front().mean_intensity));
  const double e_hi = std::exp(crf.g(crf.seed_refs.back().mean_intensity));
  crf.alpha = (e_hi - e_lo) / (hi.meta().exposure_ms - lo.meta().exposure_ms);
  return crf;
}

/// Eq. (8) arithmetic: (alpha * dt_delta + e_o) / e_o.
inline double exposure_scale_factor(double alpha, double seed_value, double dt_delta) {
  return (alpha * dt_delta + seed_value) / seed_value;
}

/// K_t for moving a seed with metadata `seed` and reference mean intensity
/// `seed_mean` to exposure `t_target`.
inline double exposure_scale(const InverseCrf& crf, const CaptureMeta& seed, double seed_mean,
                             double t_target, const AttributeBounds& bounds) {
  if (t_target < bounds.t_min || t_target > bounds.t_max) {
    throw Error(Errc::OutOfRange, "target exposure " + std::to_string(t_target) +
                                      " ms lies outside the configured bounds");
  }
  if (t_target == seed.exposure_ms) return 1.0;
  const double e_o = std::exp(crf.g(seed_mean));
  return exposure_scale_factor(crf.alpha, e_o, t_target - seed.exposure_ms);
}

inline double gain_scale(double g_target_db, double g_seed_db) {
  if (g_target_db == g_seed_db) return 1.0;
  return std::pow(kGainScaleBase, (g_target_db - g_seed_db) / 20.0);
}

/// Reference mean intensity for a seed: the fit-time value when the seed is
/// one of the fitted captures, otherwise the mean over its unclipped pixels.
inline double seed_reference_mean(const InverseCrf& crf, const Image& seed,
                                  const CrfFitOptions& opt = {}) {
  if (seed.meta().gain_db == crf.gain_db) {
    for (const auto& ref : crf.seed_refs) {
      if (ref.exposure_ms == seed.meta().exposure_ms) return ref.mean_intensity;
    }
  }
  std::vector<std::uint8_t> mask(seed.size());
  for (std::size_t p = 0; p < mask.size(); ++p) {
    const int z = seed.pixels()[p];
    mask[p] = z > opt.valid_low && z < opt.valid_high;
  }
  return masked_mean(seed, mask);
}

inline ScaleFactor scale_factor(const InverseCrf& crf, const Image& seed,
                                const CameraAttributes& target, const AttributeBounds& bounds) {
  if (target.gain_db < bounds.g_min || target.gain_db > bounds.g_max) {
    throw Error(Errc::OutOfRange, "target gain lies outside the configured bounds");
  }
  ScaleFactor s;
  s.k_t = exposure_scale(crf, seed.meta(), seed_reference_mean(crf, seed), target.exposure_ms, bounds);
  s.k_g = gain_scale(target.gain_db, seed.meta().gain_db);
  s.k_synth = s.k_t * s.k_g;
  return s;
}

/// 256-entry intensity map for a given synthesis factor.
inline std::array<std::uint8_t, 256> synthesis_lut(const InverseCrf& crf, double k_synth) {
  std::array<std::uint8_t, 256> lut{};
  if (!(k_synth > 0.0)) return lut;  // no light: everything maps to black
  const double shift = std::log(k_synth);
  const double lo = crf.g_table.front();
  const double hi = crf.g_table.back();
  for (int z = 0; z < 256; ++z) {
    const double v = std::clamp(crf.g_table[z] + shift, lo, hi);
    lut[z] = crf.inverse_quantized(v);
  }
  return lut;
}

/// Synthetic capture at `target` derived from `seed`.
inline Image synthesize(const Image& seed, const InverseCrf& crf, const CameraAttributes& target,
                        const AttributeBounds& bounds) {
  const auto s = scale_factor(crf, seed, target, bounds);
  const auto lut = synthesis_lut(crf, s.k_synth);
  std::vector<std::uint8_t> out(seed.size());
  const auto px = seed.pixels();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = lut[px[i]];
  CaptureMeta meta{target.exposure_ms, target.gain_db, Source::Synthetic, seed.meta().lux};
  return Image(seed.width(), seed.height(), std::move(out), meta);
}

struct SeedPolicy {
  // A seed is skipped when more than this fraction of its pixels is clipped on
  // the side the synthesis moves away from (bright pixels when darkening,
  // dark pixels when brightening). Clipped pixels carry no radiance.
  double max_clipped_fraction = 0.01;
  int clip_low = 5;
  int clip_high = 250;
};

namespace detail {

inline double clipped_fraction(const Image& img, bool high, const SeedPolicy& policy) {
  std::size_t n = 0;
  for (auto z : img.pixels()) {
    if (high ? z >= policy.clip_high : z <= policy.clip_low) ++n;
  }
  return static_cast<double>(n) / static_cast<double>(img.size());
}

}  // namespace detail

/// Seed closest to the target in log-exposure; ties go to the lower exposure.
/// Seeds clipped in the direction of the synthesis are passed over; when every
/// seed is clipped, the least clipped one wins.
inline const Image& pick_seed(std::span<const Image> seeds, const CameraAttributes& target,
                              const SeedPolicy& policy = {}) {
  if (seeds.empty()) throw Error(Errc::InvalidArgument, "pick_seed needs at least one seed");
  const Image* best = nullptr;
  double best_excess = 0.0;
  double best_d = 0.0;
  for (const auto& s : seeds) {
    const double log_t = std::log(target.exposure_ms / s.meta().exposure_ms);
    const double log_gain = std::log(kGainScaleBase) * (target.gain_db - s.meta().gain_db) / 20.0;
    const double direction = log_t + log_gain;
    double excess = 0.0;
    if (direction != 0.0) {
      excess = std::max(0.0, detail::clipped_fraction(s, direction < 0.0, policy) -
                                 policy.max_clipped_fraction);
    }
    const double d = std::abs(log_t);
    const bool better =
        best == nullptr || excess < best_excess ||
        (excess == best_excess &&
         (d < best_d || (d == best_d && s.meta().exposure_ms < best->meta().exposure_ms)));
    if (better) {
      best = &s;
      best_excess = excess;
      best_d = d;
    }
  }
  return *best;
}

}  // namespace autocam
