// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the autocam Project.

// Closed-loop exposure/gain control: two boundary captures, an inverse CRF
// fit, then Bayesian optimization over synthetic images only.

#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "autocam/camera.hpp"
#include "autocam/crf.hpp"
#include "autocam/error.hpp"
#include "autocam/gp.hpp"
#include "autocam/image.hpp"
#include "autocam/imagecore.hpp"
#include "autocam/metric.hpp"

namespace autocam {

struct ControlConfig {
  AttributeBounds bounds;
  int budget = 10;
  double var_stop = 0.05;  // posterior std, standardized units
  int downsample_factor = 4;
  MetricConfig metric;
  bool verify_with_real_capture = true;
  int grid_exposure = 40;
  int grid_gain = 25;
  CrfFitOptions crf;
  SeedPolicy seed_policy;
  // Among attributes the synthesis treats as equally bright, report the one
  // with the least gain.
  bool prefer_low_gain = true;

  void validate() const {
    bounds.validate();
    metric.validate();
    if (budget < 1) throw Error(Errc::InvalidArgument, "budget must be >= 1");
    if (std::isnan(var_stop) || var_stop < 0.0) throw Error(Errc::InvalidArgument, "var_stop must be >= 0");
    if (downsample_factor < 1) throw Error(Errc::InvalidArgument, "downsample_factor must be >= 1");
    if (grid_exposure < 2 || grid_gain < 1) {
      throw Error(Errc::InvalidArgument, "candidate grid needs >= 2 exposures and >= 1 gain");
    }
  }
};

struct TraceRecord {
  int iter = 0;
  CameraAttributes attrs;
  double score = 0.0;
  double post_mean_max = 0.0;
  double post_var_max = 0.0;  // score units squared
};

/// Wall-clock milliseconds per stage. Capture time is kept apart so the
/// optimizer cost can be reported without the simulator.
struct StageTimes {
  double capture_ms = 0.0;
  double crf_fit_ms = 0.0;
  double synthesis_ms = 0.0;
  double metric_ms = 0.0;
  double gp_ms = 0.0;
  double total_ms = 0.0;

  double optimizer_ms() const { return total_ms - capture_ms; }
};

struct ControlResult {
  CameraAttributes best;
  double best_score = 0.0;  // posterior mean at `best`
  std::optional<double> verified_score;
  std::vector<TraceRecord> trace;
  StageTimes wall_times;
  int real_evals = 0;
  int synth_evals = 0;
  InverseCrf crf;
  GpHyperParams hyper;
};

namespace detail {

using Clock = std::chrono::steady_clock;

inline double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace detail

/// Attributes with the same synthesis brightness t * 7.01^(g/20) as `a`, using
/// exposure before gain.
inline CameraAttributes lowest_gain_equivalent(const CameraAttributes& a, const AttributeBounds& b) {
  const double k = a.exposure_ms * std::pow(kGainScaleBase, (a.gain_db - b.g_min) / 20.0);
  CameraAttributes out;
  out.exposure_ms = std::clamp(k, b.t_min, b.t_max);
  out.gain_db = std::clamp(b.g_min + 20.0 * std::log(k / out.exposure_ms) / std::log(kGainScaleBase),
                           b.g_min, b.g_max);
  return out;
}

inline ControlResult run(CameraInterface& cam, const ControlConfig& cfg) {
  cfg.validate();
  const auto t_start = detail::Clock::now();
  const AttributeBounds& b = cfg.bounds;
  const auto cb = cam.bounds();
  if (b.t_min < cb.t_min || b.t_max > cb.t_max || b.g_min < cb.g_min || b.g_max > cb.g_max) {
    throw Error(Errc::InvalidArgument, "control bounds exceed the camera bounds");
  }
  ControlResult res;

  auto t0 = detail::Clock::now();
  std::vector<Image> full{cam.capture({b.t_min, b.g_min}), cam.capture({b.t_max, b.g_min})};
  res.wall_times.capture_ms += detail::ms_since(t0);
  res.real_evals = 2;

  t0 = detail::Clock::now();
  res.crf = fit_inverse_crf(full, cfg.crf);
  res.wall_times.crf_fit_ms = detail::ms_since(t0);

  std::vector<Image> seeds;
  for (const auto& im : full) seeds.push_back(downsample(im, cfg.downsample_factor));

  std::vector<UnitPoint> xs;
  std::vector<double> ys;
  t0 = detail::Clock::now();
  for (const auto& s : seeds) {
    xs.push_back(normalize(s.meta().attributes(), b));
    ys.push_back(newg(s, cfg.metric).newg);
  }
  res.wall_times.metric_ms += detail::ms_since(t0);

  const auto grid = make_candidate_grid(b, cfg.grid_exposure, cfg.grid_gain);
  std::vector<std::uint8_t> used(grid.points.size(), 0);
  auto mark_used = [&](const UnitPoint& p) {
    for (std::size_t i = 0; i < grid.points.size(); ++i) {
      const auto& q = grid.points[i].normalized;
      if (std::hypot(q[0] - p[0], q[1] - p[1]) < detail::kDuplicateTolerance) used[i] = 1;
    }
  };
  for (const auto& p : xs) mark_used(p);

  t0 = detail::Clock::now();
  res.hyper = GpHyperParams{};
  auto model = GpModel::fit(xs, ys, res.hyper);
  res.wall_times.gp_ms += detail::ms_since(t0);

  for (int iter = 1; iter <= cfg.budget; ++iter) {
    if (std::find(used.begin(), used.end(), 0) == used.end()) break;
    t0 = detail::Clock::now();
    const std::size_t idx = acquire_max_variance(&model, grid.points, used);
    res.wall_times.gp_ms += detail::ms_since(t0);
    const auto& cand = grid.points[idx];

    t0 = detail::Clock::now();
    const Image& seed = pick_seed(seeds, cand.attrs, cfg.seed_policy);
    const Image synth = synthesize(seed, res.crf, cand.attrs, b);
    res.wall_times.synthesis_ms += detail::ms_since(t0);

    t0 = detail::Clock::now();
    const double score = newg(synth, cfg.metric).newg;
    res.wall_times.metric_ms += detail::ms_since(t0);
    ++res.synth_evals;

    t0 = detail::Clock::now();
    xs.push_back(cand.normalized);
    ys.push_back(score);
    used[idx] = 1;
    res.hyper = xs.size() >= 5 ? select_hyperparams(xs, ys) : GpHyperParams{};
    model = GpModel::fit(xs, ys, res.hyper);
    double mean_max = -std::numeric_limits<double>::infinity();
    double var_max = 0.0;
    for (const auto& p : grid.points) {
      const auto post = model.posterior_standardized(p.normalized);
      mean_max = std::max(mean_max, post.mean);
      var_max = std::max(var_max, post.var);
    }
    res.wall_times.gp_ms += detail::ms_since(t0);

    const double scale = model.y_scale();
    res.trace.push_back({iter, cand.attrs, score, model.y_mean() + scale * mean_max, scale * scale * var_max});
    if (std::sqrt(var_max) < cfg.var_stop) break;
  }

  t0 = detail::Clock::now();
  std::size_t best = 0;
  double best_mean = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    const double m = model.posterior(grid.points[i].normalized).mean;
    if (m > best_mean) {
      best_mean = m;
      best = i;
    }
  }
  res.wall_times.gp_ms += detail::ms_since(t0);
  res.best = grid.points[best].attrs;
  if (cfg.prefer_low_gain) res.best = lowest_gain_equivalent(res.best, b);
  res.best_score = model.posterior(normalize(res.best, b)).mean;

  if (cfg.verify_with_real_capture) {
    // Not part of the optimization timing budget.
    t0 = detail::Clock::now();
    const Image img = cam.capture(res.best);
    res.wall_times.capture_ms += detail::ms_since(t0);
    res.verified_score = newg(downsample(img, cfg.downsample_factor), cfg.metric).newg;
    ++res.real_evals;
  }
  res.wall_times.total_ms = detail::ms_since(t_start);
  return res;
}

struct SurfacePoint {
  CameraAttributes attrs;
  MetricScore score;
};

struct ExhaustiveResult {
  CameraAttributes best;      // NEWG argmax
  CameraAttributes best_ewg;  // EWG argmax
  MetricScore best_score;
  std::vector<SurfacePoint> surface;  // exposure-major
};

/// Captures every point of an n_exposure x n_gain grid and scores it at the
/// working resolution. The first maximum in grid order wins.
inline ExhaustiveResult exhaustive_reference(CameraInterface& cam, const ControlConfig& cfg,
                                             int n_exposure, int n_gain) {
  cfg.validate();
  const auto grid = make_candidate_grid(cfg.bounds, n_exposure, n_gain);
  ExhaustiveResult res;
  double best_n = -std::numeric_limits<double>::infinity();
  double best_e = -std::numeric_limits<double>::infinity();
  for (const auto& p : grid.points) {
    const Image img = downsample(cam.capture(p.attrs), cfg.downsample_factor);
    const auto s = newg(img, cfg.metric);
    res.surface.push_back({p.attrs, s});
    if (s.newg > best_n) {
      best_n = s.newg;
      res.best = p.attrs;
      res.best_score = s;
    }
    if (s.g_t > best_e) {
      best_e = s.g_t;
      res.best_ewg = p.attrs;
    }
  }
  return res;
}

}  // namespace autocam
