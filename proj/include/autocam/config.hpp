// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the autocam Project.

// Run configuration as a JSON document. Every section is optional; unknown
// keys are rejected so typos do not silently fall back to defaults.

#pragma once

#include <cstdint>
#include <set>
#include <string>

#include <json.hpp>

#include "autocam/controller.hpp"
#include "autocam/error.hpp"
#include "autocam/simcam.hpp"

namespace autocam {

struct GridSpec {
  int exposure = 20;
  int gain = 13;

  void validate() const {
    if (exposure < 2 || gain < 1) {
      throw Error(Errc::InvalidConfig, "grid needs >= 2 exposures and >= 1 gain");
    }
  }
};

/// Parses "TxG", e.g. "20x13".
inline GridSpec parse_grid(const std::string& s) {
  const auto x = s.find('x');
  GridSpec g;
  try {
    if (x == std::string::npos) throw std::invalid_argument("missing 'x'");
    std::size_t used = 0;
    g.exposure = std::stoi(s.substr(0, x), &used);
    if (used != x) throw std::invalid_argument("trailing characters");
    const auto rest = s.substr(x + 1);
    g.gain = std::stoi(rest, &used);
    if (used != rest.size()) throw std::invalid_argument("trailing characters");
  } catch (const std::exception&) {
    throw Error(Errc::InvalidConfig, "grid must look like <exposures>x<gains>, got '" + s + "'");
  }
  g.validate();
  return g;
}

struct RunConfig {
  ControlConfig control;
  SensorModel sensor;
  std::string scene = "indoor_window";
  std::string out = "out";
  GridSpec grid;

  void validate() const {
    try {
      control.validate();
      if (control.crf.n_samples < 32) throw Error(Errc::InvalidArgument, "crf.n_samples must be >= 32");
      if (!(control.crf.lambda_smooth > 0.0)) throw Error(Errc::InvalidArgument, "crf.lambda_smooth must be > 0");
      sensor.validate();
      grid.validate();
    } catch (const Error& e) {
      throw Error(Errc::InvalidConfig, e.what());
    }
  }
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw Error(Errc::InvalidConfig, where + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw Error(Errc::InvalidConfig, "unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
void read_key(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::InvalidConfig, "bad value for '" + where + "." + key + "'");
  }
}

}  // namespace detail

inline nlohmann::ordered_json to_json(const RunConfig& c) {
  const auto& ctl = c.control;
  const auto& m = ctl.metric;
  const auto& crf = ctl.crf;
  nlohmann::ordered_json j;
  j["scene"] = c.scene;
  j["out"] = c.out;
  j["grid"] = {{"exposure", c.grid.exposure}, {"gain", c.grid.gain}};
  j["control"] = {{"t_min", ctl.bounds.t_min},
                  {"t_max", ctl.bounds.t_max},
                  {"g_min", ctl.bounds.g_min},
                  {"g_max", ctl.bounds.g_max},
                  {"budget", ctl.budget},
                  {"var_stop", ctl.var_stop},
                  {"downsample_factor", ctl.downsample_factor},
                  {"verify_with_real_capture", ctl.verify_with_real_capture},
                  {"grid_exposure", ctl.grid_exposure},
                  {"grid_gain", ctl.grid_gain},
                  {"prefer_low_gain", ctl.prefer_low_gain}};
  j["metric"] = {{"kappa", m.kappa},
                 {"snr_ref_db", m.snr_ref_db},
                 {"sat_high", m.sat_high},
                 {"sat_low", m.sat_low},
                 {"entropy_window", m.entropy_window},
                 {"activation_steepness", m.activation_steepness},
                 {"activation_center", m.activation_center},
                 {"snr_patch", m.snr_patch}};
  j["crf"] = {{"lambda_smooth", crf.lambda_smooth},
              {"n_samples", crf.n_samples},
              {"max_isotonic_shift", crf.max_isotonic_shift},
              {"valid_low", crf.valid_low},
              {"valid_high", crf.valid_high},
              {"min_table_value", crf.min_table_value},
              {"exclude_clipped", crf.exclude_clipped}};
  j["seed_policy"] = {{"max_clipped_fraction", ctl.seed_policy.max_clipped_fraction},
                      {"clip_low", ctl.seed_policy.clip_low},
                      {"clip_high", ctl.seed_policy.clip_high}};
  j["sensor"] = {{"x_sat", c.sensor.x_sat},
                 {"gamma", c.sensor.gamma},
                 {"read_noise_sigma", c.sensor.read_noise_sigma},
                 {"shot_noise_coeff", c.sensor.shot_noise_coeff},
                 {"rng_seed", c.sensor.rng_seed}};
  return j;
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  using detail::read_key;
  using detail::reject_unknown;
  RunConfig c;
  reject_unknown(j, {"scene", "out", "grid", "control", "metric", "crf", "seed_policy", "sensor"}, "config");
  read_key(j, "scene", c.scene, "config");
  read_key(j, "out", c.out, "config");
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    reject_unknown(g, {"exposure", "gain"}, "grid");
    read_key(g, "exposure", c.grid.exposure, "grid");
    read_key(g, "gain", c.grid.gain, "grid");
  }
  if (j.contains("control")) {
    const auto& s = j.at("control");
    auto& ctl = c.control;
    reject_unknown(s, {"t_min", "t_max", "g_min", "g_max", "budget", "var_stop", "downsample_factor",
                       "verify_with_real_capture", "grid_exposure", "grid_gain", "prefer_low_gain"},
                   "control");
    read_key(s, "t_min", ctl.bounds.t_min, "control");
    read_key(s, "t_max", ctl.bounds.t_max, "control");
    read_key(s, "g_min", ctl.bounds.g_min, "control");
    read_key(s, "g_max", ctl.bounds.g_max, "control");
    read_key(s, "budget", ctl.budget, "control");
    read_key(s, "var_stop", ctl.var_stop, "control");
    read_key(s, "downsample_factor", ctl.downsample_factor, "control");
    read_key(s, "verify_with_real_capture", ctl.verify_with_real_capture, "control");
    read_key(s, "grid_exposure", ctl.grid_exposure, "control");
    read_key(s, "grid_gain", ctl.grid_gain, "control");
    read_key(s, "prefer_low_gain", ctl.prefer_low_gain, "control");
  }
  if (j.contains("metric")) {
    const auto& s = j.at("metric");
    auto& m = c.control.metric;
    reject_unknown(s, {"kappa", "snr_ref_db", "sat_high", "sat_low", "entropy_window", "activation_steepness",
                       "activation_center", "snr_patch"},
                   "metric");
    read_key(s, "kappa", m.kappa, "metric");
    read_key(s, "snr_ref_db", m.snr_ref_db, "metric");
    read_key(s, "sat_high", m.sat_high, "metric");
    read_key(s, "sat_low", m.sat_low, "metric");
    read_key(s, "entropy_window", m.entropy_window, "metric");
    read_key(s, "activation_steepness", m.activation_steepness, "metric");
    read_key(s, "activation_center", m.activation_center, "metric");
    read_key(s, "snr_patch", m.snr_patch, "metric");
  }
  if (j.contains("crf")) {
    const auto& s = j.at("crf");
    auto& f = c.control.crf;
    reject_unknown(s, {"lambda_smooth", "n_samples", "max_isotonic_shift", "valid_low", "valid_high",
                       "min_table_value", "exclude_clipped"},
                   "crf");
    read_key(s, "lambda_smooth", f.lambda_smooth, "crf");
    read_key(s, "n_samples", f.n_samples, "crf");
    read_key(s, "max_isotonic_shift", f.max_isotonic_shift, "crf");
    read_key(s, "valid_low", f.valid_low, "crf");
    read_key(s, "valid_high", f.valid_high, "crf");
    read_key(s, "min_table_value", f.min_table_value, "crf");
    read_key(s, "exclude_clipped", f.exclude_clipped, "crf");
  }
  if (j.contains("seed_policy")) {
    const auto& s = j.at("seed_policy");
    auto& p = c.control.seed_policy;
    reject_unknown(s, {"max_clipped_fraction", "clip_low", "clip_high"}, "seed_policy");
    read_key(s, "max_clipped_fraction", p.max_clipped_fraction, "seed_policy");
    read_key(s, "clip_low", p.clip_low, "seed_policy");
    read_key(s, "clip_high", p.clip_high, "seed_policy");
  }
  if (j.contains("sensor")) {
    const auto& s = j.at("sensor");
    reject_unknown(s, {"x_sat", "gamma", "read_noise_sigma", "shot_noise_coeff", "rng_seed"}, "sensor");
    read_key(s, "x_sat", c.sensor.x_sat, "sensor");
    read_key(s, "gamma", c.sensor.gamma, "sensor");
    read_key(s, "read_noise_sigma", c.sensor.read_noise_sigma, "sensor");
    read_key(s, "shot_noise_coeff", c.sensor.shot_noise_coeff, "sensor");
    read_key(s, "rng_seed", c.sensor.rng_seed, "sensor");
  }
  c.validate();
  return c;
}

inline RunConfig parse_run_config(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::InvalidConfig, std::string("config is not valid JSON: ") + e.what());
  }
  return run_config_from_json(j);
}

}  // namespace autocam
