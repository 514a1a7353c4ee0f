// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the autocam Project.

// Command implementations behind the `autocam` tool. Every command writes its
// outputs under one directory together with `config.echo.json`. Outputs other
// than timing.json depend only on the configuration.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "autocam/config.hpp"
#include "autocam/controller.hpp"
#include "autocam/crf.hpp"
#include "autocam/error.hpp"
#include "autocam/imagecore.hpp"
#include "autocam/metric.hpp"
#include "autocam/pgm.hpp"
#include "autocam/simcam.hpp"

namespace autocam::cli {

namespace fs = std::filesystem;

/// CSV number formatting: 10 significant digits.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

inline void prepare_out_dir(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) {
    throw Error(Errc::IoError, "cannot create output directory " + out.string());
  }
}

inline void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline void echo_config(const RunConfig& cfg, const fs::path& out) {
  write_json(out / "config.echo.json", to_json(cfg));
}

inline nlohmann::ordered_json attrs_json(const CameraAttributes& a) {
  return {{"exposure_ms", a.exposure_ms}, {"gain_db", a.gain_db}};
}

// ---------------------------------------------------------------------------
// Dataset

struct Dataset {
  std::string scene;
  AttributeBounds bounds;
  std::vector<std::string> files;
  std::vector<Image> images;
};

inline std::string image_file_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "img_%04zu.pgm", i);
  return buf;
}

/// Captures the exposure-major grid and writes the stack with its manifest.
inline Dataset cmd_simulate(const RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  prepare_out_dir(out);
  echo_config(cfg, out);
  const auto scene = find_scene(cfg.scene);
  const auto& b = cfg.control.bounds;
  SimulatedCamera cam(scene, cfg.sensor, b);
  const auto grid = make_candidate_grid(b, cfg.grid.exposure, cfg.grid.gain);

  Dataset ds{scene.name, b, {}, {}};
  nlohmann::ordered_json entries = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < grid.points.size(); ++i) {
    Image img = cam.capture(grid.points[i].attrs);
    const auto name = image_file_name(i);
    save_image(out / name, img);
    entries.push_back({{"file", name},
                       {"sidecar", sidecar_path(name).string()},
                       {"exposure_ms", img.meta().exposure_ms},
                       {"gain_db", img.meta().gain_db}});
    ds.files.push_back(name);
    ds.images.push_back(std::move(img));
  }
  nlohmann::ordered_json exposures = nlohmann::ordered_json::array();
  nlohmann::ordered_json gains = nlohmann::ordered_json::array();
  for (int i = 0; i < grid.n_exposure; ++i) exposures.push_back(grid.points[grid.index(i, 0)].attrs.exposure_ms);
  for (int j = 0; j < grid.n_gain; ++j) gains.push_back(grid.points[grid.index(0, j)].attrs.gain_db);

  nlohmann::ordered_json manifest;
  manifest["scene"] = scene.name;
  manifest["rng_seed"] = cfg.sensor.rng_seed;
  manifest["bounds"] = {{"t_min", b.t_min}, {"t_max", b.t_max}, {"g_min", b.g_min}, {"g_max", b.g_max}};
  manifest["grid"] = {{"exposure_ms", exposures}, {"gain_db", gains}};
  manifest["images"] = entries;
  write_json(out / "manifest.json", manifest);
  return ds;
}

inline Dataset load_dataset(const fs::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw Error(Errc::IoError, "no manifest.json in " + dir.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(read_text_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptImage, manifest_path.string() + ": " + e.what());
  }
  Dataset ds;
  try {
    ds.scene = m.value("scene", std::string{});
    for (const auto& e : m.at("images")) {
      const auto file = e.at("file").get<std::string>();
      Image img = load_image(dir / file);
      if (e.contains("exposure_ms") && (e.at("exposure_ms").get<double>() != img.meta().exposure_ms ||
                                        e.at("gain_db").get<double>() != img.meta().gain_db)) {
        throw Error(Errc::CorruptImage, file + ": sidecar disagrees with the manifest");
      }
      ds.files.push_back(file);
      ds.images.push_back(std::move(img));
    }
    if (ds.images.empty()) throw Error(Errc::InvalidArgument, "dataset lists no images");
    if (m.contains("bounds")) {
      const auto& b = m.at("bounds");
      ds.bounds = {b.at("t_min").get<double>(), b.at("t_max").get<double>(), b.at("g_min").get<double>(),
                   b.at("g_max").get<double>()};
    } else {
      auto& b = ds.bounds;
      b.t_min = b.g_min = std::numeric_limits<double>::infinity();
      b.t_max = b.g_max = -std::numeric_limits<double>::infinity();
      for (const auto& img : ds.images) {
        b.t_min = std::min(b.t_min, img.meta().exposure_ms);
        b.t_max = std::max(b.t_max, img.meta().exposure_ms);
        b.g_min = std::min(b.g_min, img.meta().gain_db);
        b.g_max = std::max(b.g_max, img.meta().gain_db);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::CorruptImage, manifest_path.string() + ": " + e.what());
  }
  return ds;
}

namespace detail {

/// Position of every image on the dataset's (exposure, gain) lattice.
struct LatticeIndex {
  std::vector<int> i_t;
  std::vector<int> i_g;
};

inline LatticeIndex lattice_index(const Dataset& ds) {
  std::map<double, int> ts;
  std::map<double, int> gs;
  for (const auto& img : ds.images) {
    ts.emplace(img.meta().exposure_ms, 0);
    gs.emplace(img.meta().gain_db, 0);
  }
  int k = 0;
  for (auto& [_, v] : ts) v = k++;
  k = 0;
  for (auto& [_, v] : gs) v = k++;
  LatticeIndex li;
  for (const auto& img : ds.images) {
    li.i_t.push_back(ts.at(img.meta().exposure_ms));
    li.i_g.push_back(gs.at(img.meta().gain_db));
  }
  return li;
}

/// The two boundary-exposure captures at the lowest gain, shortest first.
inline std::vector<Image> boundary_seeds(const Dataset& ds) {
  double t_lo = std::numeric_limits<double>::infinity();
  double t_hi = -t_lo;
  double g_lo = std::numeric_limits<double>::infinity();
  for (const auto& img : ds.images) g_lo = std::min(g_lo, img.meta().gain_db);
  for (const auto& img : ds.images) {
    if (img.meta().gain_db != g_lo) continue;
    t_lo = std::min(t_lo, img.meta().exposure_ms);
    t_hi = std::max(t_hi, img.meta().exposure_ms);
  }
  const Image* lo = nullptr;
  const Image* hi = nullptr;
  for (const auto& img : ds.images) {
    if (img.meta().gain_db != g_lo) continue;
    if (!lo && img.meta().exposure_ms == t_lo) lo = &img;
    if (!hi && img.meta().exposure_ms == t_hi) hi = &img;
  }
  if (!lo || !hi || lo == hi) {
    throw Error(Errc::InvalidArgument, "dataset needs two distinct exposures at its lowest gain");
  }
  return {*lo, *hi};
}

inline const char* kScoreHeader = "exposure_ms,gain_db,g_t,g_k,newg,snr_db\n";

inline std::string score_row(const CameraAttributes& a, const MetricScore& s) {
  return num(a.exposure_ms) + "," + num(a.gain_db) + "," + num(s.g_t) + "," + num(s.g_k) + "," +
         num(s.newg) + "," + num(s.snr_db) + "\n";
}

}  // namespace detail

// ---------------------------------------------------------------------------
// crf fit

/// Fits the inverse CRF on the dataset's boundary exposures at its lowest gain.
inline InverseCrf cmd_crf_fit(const RunConfig& cfg, const fs::path& dataset, const fs::path& out) {
  cfg.validate();
  const auto ds = load_dataset(dataset);
  prepare_out_dir(out);
  echo_config(cfg, out);
  const auto seeds = detail::boundary_seeds(ds);
  const auto crf = fit_inverse_crf(seeds, cfg.control.crf);

  std::string csv = "intensity,g_value\n";
  for (int z = 0; z < 256; ++z) csv += std::to_string(z) + "," + num(crf.g_table[z]) + "\n";
  write_text_file(out / "crf.csv", csv);

  nlohmann::ordered_json refs = nlohmann::ordered_json::array();
  for (const auto& r : crf.seed_refs) refs.push_back({{"exposure_ms", r.exposure_ms}, {"mean_intensity", r.mean_intensity}});
  nlohmann::ordered_json j;
  j["alpha"] = crf.alpha;
  j["ln_e"] = crf.ln_e;
  j["lambda"] = crf.lambda_smooth;
  j["gain_db"] = crf.gain_db;
  j["seed_refs"] = refs;
  write_json(out / "crf.json", j);
  return crf;
}

// ---------------------------------------------------------------------------
// metric sweep

struct SweepResult {
  std::vector<MetricScore> scores;  // dataset order
  std::size_t argmax_ewg = 0;
  std::size_t argmax_newg = 0;
};

/// Scores every dataset image at the working resolution.
inline SweepResult cmd_metric_sweep(const RunConfig& cfg, const fs::path& dataset, const fs::path& out) {
  cfg.validate();
  const auto ds = load_dataset(dataset);
  prepare_out_dir(out);
  echo_config(cfg, out);
  SweepResult r;
  std::string csv = detail::kScoreHeader;
  for (std::size_t i = 0; i < ds.images.size(); ++i) {
    const auto s = newg(downsample(ds.images[i], cfg.control.downsample_factor), cfg.control.metric);
    r.scores.push_back(s);
    csv += detail::score_row(ds.images[i].meta().attributes(), s);
    if (s.g_t > r.scores[r.argmax_ewg].g_t) r.argmax_ewg = i;
    if (s.newg > r.scores[r.argmax_newg].newg) r.argmax_newg = i;
  }
  write_text_file(out / "metric.csv", csv);
  std::string arg = std::string("metric,") + detail::kScoreHeader;
  arg += "ewg," + detail::score_row(ds.images[r.argmax_ewg].meta().attributes(), r.scores[r.argmax_ewg]);
  arg += "newg," + detail::score_row(ds.images[r.argmax_newg].meta().attributes(), r.scores[r.argmax_newg]);
  write_text_file(out / "metric_argmax.csv", arg);
  return r;
}

// ---------------------------------------------------------------------------
// synth validate

struct SynthRow {
  CameraAttributes attrs;
  double real_mean = 0.0;
  double synth_mean = 0.0;
  double rel_error = 0.0;
  double real_newg = 0.0;
  double synth_newg = 0.0;
};

struct SynthSummary {
  std::vector<SynthRow> rows;  // dataset order
  double max_rel_error = 0.0;
  CameraAttributes max_rel_error_at;
  std::size_t real_argmax = 0;
  std::size_t synth_argmax = 0;
  int argmax_step_distance = 0;  // Chebyshev distance on the dataset lattice
  bool argmax_agree = false;     // within one grid step

  std::string summary_line() const {
    return "max_rel_error=" + num(max_rel_error) + " argmax_agree=" + (argmax_agree ? "true" : "false");
  }
};

/// Synthesizes every dataset grid point from the two boundary seeds and
/// compares it with the real capture at the working resolution.
inline SynthSummary synth_validate(const RunConfig& cfg, const Dataset& ds) {
  const auto full = detail::boundary_seeds(ds);
  const auto crf = fit_inverse_crf(full, cfg.control.crf);
  const int f = cfg.control.downsample_factor;
  std::vector<Image> seeds;
  for (const auto& s : full) seeds.push_back(downsample(s, f));

  SynthSummary sum;
  for (const auto& img : ds.images) {
    const auto attrs = img.meta().attributes();
    const Image real = downsample(img, f);
    const Image synth = synthesize(pick_seed(seeds, attrs, cfg.control.seed_policy), crf, attrs, ds.bounds);
    SynthRow row{attrs, real.mean(), synth.mean(), 0.0, newg(real, cfg.control.metric).newg,
                 newg(synth, cfg.control.metric).newg};
    row.rel_error = std::abs(row.synth_mean - row.real_mean) / std::max(row.real_mean, 1.0);
    if (row.rel_error > sum.max_rel_error) {
      sum.max_rel_error = row.rel_error;
      sum.max_rel_error_at = attrs;
    }
    sum.rows.push_back(row);
  }
  for (std::size_t i = 1; i < sum.rows.size(); ++i) {
    if (sum.rows[i].real_newg > sum.rows[sum.real_argmax].real_newg) sum.real_argmax = i;
    if (sum.rows[i].synth_newg > sum.rows[sum.synth_argmax].synth_newg) sum.synth_argmax = i;
  }
  const auto li = detail::lattice_index(ds);
  sum.argmax_step_distance = std::max(std::abs(li.i_t[sum.real_argmax] - li.i_t[sum.synth_argmax]),
                                      std::abs(li.i_g[sum.real_argmax] - li.i_g[sum.synth_argmax]));
  sum.argmax_agree = sum.argmax_step_distance <= 1;
  return sum;
}

inline SynthSummary cmd_synth_validate(const RunConfig& cfg, const fs::path& dataset, const fs::path& out) {
  cfg.validate();
  const auto ds = load_dataset(dataset);
  prepare_out_dir(out);
  echo_config(cfg, out);
  const auto sum = synth_validate(cfg, ds);

  std::string csv = "exposure_ms,gain_db,real_mean,synth_mean,rel_error,real_newg,synth_newg\n";
  for (const auto& r : sum.rows) {
    csv += num(r.attrs.exposure_ms) + "," + num(r.attrs.gain_db) + "," + num(r.real_mean) + "," +
           num(r.synth_mean) + "," + num(r.rel_error) + "," + num(r.real_newg) + "," + num(r.synth_newg) + "\n";
  }
  write_text_file(out / "synth.csv", csv);
  nlohmann::ordered_json j;
  j["max_rel_error"] = sum.max_rel_error;
  j["max_rel_error_at"] = attrs_json(sum.max_rel_error_at);
  j["real_argmax"] = attrs_json(sum.rows[sum.real_argmax].attrs);
  j["synth_argmax"] = attrs_json(sum.rows[sum.synth_argmax].attrs);
  j["argmax_step_distance"] = sum.argmax_step_distance;
  j["argmax_agree"] = sum.argmax_agree;
  write_json(out / "synth_summary.json", j);
  return sum;
}

// ---------------------------------------------------------------------------
// optimize

inline ControlResult cmd_optimize(const RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  prepare_out_dir(out);
  echo_config(cfg, out);
  SimulatedCamera cam(find_scene(cfg.scene), cfg.sensor, cfg.control.bounds);
  const auto res = run(cam, cfg.control);

  std::string csv = "iter,exposure_ms,gain_db,score,post_mean_max,post_var_max\n";
  for (const auto& t : res.trace) {
    csv += std::to_string(t.iter) + "," + num(t.attrs.exposure_ms) + "," + num(t.attrs.gain_db) + "," +
           num(t.score) + "," + num(t.post_mean_max) + "," + num(t.post_var_max) + "\n";
  }
  write_text_file(out / "trace.csv", csv);

  nlohmann::ordered_json j;
  j["scene"] = cfg.scene;
  j["rng_seed"] = cfg.sensor.rng_seed;
  j["best"] = attrs_json(res.best);
  j["best_score"] = res.best_score;
  j["verified_score"] = res.verified_score ? nlohmann::ordered_json(*res.verified_score) : nlohmann::ordered_json();
  j["iterations"] = res.trace.size();
  j["real_evals"] = res.real_evals;
  j["synth_evals"] = res.synth_evals;
  j["hyper"] = {{"length_scale_exposure", res.hyper.length_scales[0]},
                {"length_scale_gain", res.hyper.length_scales[1]},
                {"signal_var", res.hyper.signal_var},
                {"noise_var", res.hyper.noise_var}};
  j["crf"] = {{"alpha", res.crf.alpha}, {"ln_e", res.crf.ln_e}, {"lambda", res.crf.lambda_smooth}};
  write_json(out / "result.json", j);

  // Wall-clock times vary between runs, so they live in their own file.
  const auto& w = res.wall_times;
  const double n_synth = std::max(res.synth_evals, 1);
  nlohmann::ordered_json t;
  t["capture_ms"] = w.capture_ms;
  t["crf_fit_ms"] = w.crf_fit_ms;
  t["synthesis_ms"] = w.synthesis_ms;
  t["synthesis_ms_per_image"] = w.synthesis_ms / n_synth;
  t["metric_ms"] = w.metric_ms;
  t["metric_ms_per_image"] = w.metric_ms / (n_synth + 2.0);
  t["gp_ms"] = w.gp_ms;
  t["optimizer_ms"] = w.optimizer_ms();
  t["total_ms"] = w.total_ms;
  write_json(out / "timing.json", t);
  return res;
}

// ---------------------------------------------------------------------------
// exhaustive

inline ExhaustiveResult cmd_exhaustive(const RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  prepare_out_dir(out);
  echo_config(cfg, out);
  SimulatedCamera cam(find_scene(cfg.scene), cfg.sensor, cfg.control.bounds);
  const auto res = exhaustive_reference(cam, cfg.control, cfg.grid.exposure, cfg.grid.gain);

  std::string csv = detail::kScoreHeader;
  for (const auto& p : res.surface) csv += detail::score_row(p.attrs, p.score);
  write_text_file(out / "surface.csv", csv);
  nlohmann::ordered_json j;
  j["scene"] = cfg.scene;
  j["rng_seed"] = cfg.sensor.rng_seed;
  j["best"] = attrs_json(res.best);
  j["best_newg"] = res.best_score.newg;
  j["best_ewg_attrs"] = attrs_json(res.best_ewg);
  write_json(out / "exhaustive.json", j);
  return res;
}

}  // namespace autocam::cli
