// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the autocam Project.

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "autocam/cli.hpp"
#include "test_util.hpp"

using namespace autocam;
using namespace autocam::testing;
namespace fs = std::filesystem;

namespace {

RunConfig small_config(const std::string& scene, int n_t, int n_g) {
  RunConfig c;
  c.scene = scene;
  c.grid = {n_t, n_g};
  c.sensor.rng_seed = 4;
  return c;
}

std::vector<std::string> csv_lines(const fs::path& p) {
  std::istringstream in(read_text_file(p));
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  return out;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (name != "timing.json") files[name] = read_text_file(e.path());
  }
  return files;
}

std::size_t count_ext(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(dir)) n += e.path().extension() == ext;
  return n;
}

}  // namespace

TEST(CliSimulate, WritesStackAndManifest) {
  const auto out = scratch_dir("sim");
  auto cfg = small_config("indoor_window", 5, 4);
  cfg.control.bounds = {2.0, 10.0, 1.0, 9.0};
  const auto ds = cli::cmd_simulate(cfg, out);
  EXPECT_EQ(ds.images.size(), 20u);
  EXPECT_EQ(count_ext(out, ".pgm"), 20u);
  EXPECT_TRUE(fs::exists(out / "img_0019.json"));
  EXPECT_EQ(count_ext(out, ".json"), 22u);  // sidecars, manifest, config echo
  const auto m = nlohmann::json::parse(read_text_file(out / "manifest.json"));
  EXPECT_EQ(m["bounds"]["t_min"], 2.0);
  EXPECT_EQ(m["bounds"]["t_max"], 10.0);
  EXPECT_EQ(m["bounds"]["g_min"], 1.0);
  EXPECT_EQ(m["bounds"]["g_max"], 9.0);
  EXPECT_EQ(m["grid"]["exposure_ms"].front(), 2.0);
  EXPECT_EQ(m["grid"]["exposure_ms"].back(), 10.0);
  EXPECT_EQ(m["grid"]["gain_db"].size(), 4u);
  EXPECT_EQ(m["images"].size(), 20u);
  const auto back = cli::load_dataset(out);
  EXPECT_EQ(back.bounds, cfg.control.bounds);
  EXPECT_EQ(back.images[7], ds.images[7]);
  const auto echo = nlohmann::json::parse(read_text_file(out / "config.echo.json"));
  EXPECT_EQ(echo["scene"], "indoor_window");
  EXPECT_EQ(echo["sensor"]["rng_seed"], 4);
}

TEST(CliSimulate, RerunIsByteIdentical) {
  const auto a = scratch_dir("sim_a");
  const auto b = scratch_dir("sim_b");
  const auto cfg = small_config("dark_checker", 3, 2);
  cli::cmd_simulate(cfg, a);
  cli::cmd_simulate(cfg, b);
  EXPECT_EQ(snapshot(a), snapshot(b));
}

TEST(CliDataset, MissingPiecesReportTheirClass) {
  const auto out = scratch_dir("broken");
  try {
    cli::load_dataset(out);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::IoError);
  }
  cli::cmd_simulate(small_config("dark_ramp", 2, 1), out);
  fs::remove(out / "img_0001.json");
  try {
    cli::load_dataset(out);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::MissingSidecar);
  }
  write_text_file(out / "img_0001.pgm", "P5 garbage");
  write_text_file(out / "img_0001.json", R"({"exposure_ms": 20, "gain_db": 0, "source": "simulated"})");
  try {
    cli::load_dataset(out);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::CorruptImage);
  }
}

TEST(CliMetricSweep, SingleImageDataset) {
  const auto dir = scratch_dir("one");
  std::mt19937 rng(2);
  save_image(dir / "img_0000.pgm", textured_image(rng, 40, 32));
  write_text_file(dir / "manifest.json", R"({"images": [{"file": "img_0000.pgm"}]})");
  auto cfg = small_config("indoor_window", 2, 1);
  cfg.control.downsample_factor = 1;
  const auto out = dir / "sweep";
  const auto r = cli::cmd_metric_sweep(cfg, dir, out);
  ASSERT_EQ(r.scores.size(), 1u);
  const auto rows = csv_lines(out / "metric.csv");
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0], "exposure_ms,gain_db,g_t,g_k,newg,snr_db");
  const auto arg = csv_lines(out / "metric_argmax.csv");
  ASSERT_EQ(arg.size(), 3u);
  EXPECT_EQ(arg[1], "ewg," + rows[1]);
  EXPECT_EQ(arg[2], "newg," + rows[1]);
}

TEST(CliMetricSweep, ArgmaxRowsMatchMaxima) {
  const auto dir = scratch_dir("sweep");
  cli::cmd_simulate(small_config("indoor_checker", 5, 4), dir);
  const auto out = dir / "sweep";
  cli::cmd_metric_sweep(small_config("indoor_checker", 5, 4), dir, out);
  const auto rows = csv_lines(out / "metric.csv");
  ASSERT_EQ(rows.size(), 21u);
  std::string best_e, best_n;
  double max_e = -1e300, max_n = -1e300;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto f = split(rows[i]);
    ASSERT_EQ(f.size(), 6u);
    if (std::stod(f[2]) > max_e) {
      max_e = std::stod(f[2]);
      best_e = rows[i];
    }
    if (std::stod(f[4]) > max_n) {
      max_n = std::stod(f[4]);
      best_n = rows[i];
    }
  }
  const auto arg = csv_lines(out / "metric_argmax.csv");
  EXPECT_EQ(arg[1], "ewg," + best_e);
  EXPECT_EQ(arg[2], "newg," + best_n);
}

TEST(CliMetricSweep, NoiseAwareArgmaxUsesNoMoreGainOnBrightWindow) {
  const auto dir = scratch_dir("bw");
  const auto cfg = small_config("bright_window", 20, 13);
  cli::cmd_simulate(cfg, dir);
  const auto r = cli::cmd_metric_sweep(cfg, dir, dir / "sweep");
  const auto ds = cli::load_dataset(dir);
  EXPECT_LE(ds.images[r.argmax_newg].meta().gain_db, ds.images[r.argmax_ewg].meta().gain_db);
}

TEST(CliSynthValidate, SeedPointsReproduceExactly) {
  const auto dir = scratch_dir("synth");
  const auto cfg = small_config("indoor_ramp", 4, 3);
  cli::cmd_simulate(cfg, dir);
  const auto s = cli::cmd_synth_validate(cfg, dir, dir / "val");
  ASSERT_EQ(s.rows.size(), 12u);
  for (const auto& r : s.rows) {
    if (r.attrs.gain_db == 0.0 && (r.attrs.exposure_ms == 1.0 || r.attrs.exposure_ms == 20.0)) {
      EXPECT_EQ(r.rel_error, 0.0);
      EXPECT_EQ(r.real_newg, r.synth_newg);
    }
  }
  const auto rows = csv_lines(dir / "val" / "synth.csv");
  EXPECT_EQ(rows[0], "exposure_ms,gain_db,real_mean,synth_mean,rel_error,real_newg,synth_newg");
  EXPECT_EQ(rows.size(), 13u);
  const auto j = nlohmann::json::parse(read_text_file(dir / "val" / "synth_summary.json"));
  EXPECT_EQ(j["max_rel_error"].get<double>(), s.max_rel_error);
  EXPECT_EQ(j["argmax_agree"].get<bool>(), s.argmax_agree);
}

TEST(CliSynthValidate, NeedsBoundarySeeds) {
  const auto dir = scratch_dir("noseed");
  auto cfg = small_config("indoor_ramp", 2, 1);
  cfg.grid = {2, 1};
  cli::cmd_simulate(cfg, dir);
  fs::remove(dir / "img_0001.pgm");
  fs::remove(dir / "img_0001.json");
  auto m = nlohmann::json::parse(read_text_file(dir / "manifest.json"));
  m["images"].erase(1);
  write_text_file(dir / "manifest.json", m.dump());
  EXPECT_THROW(cli::cmd_synth_validate(cfg, dir, dir / "val"), Error);
}

TEST(CliCrfFit, WritesCurveAndSummary) {
  const auto dir = scratch_dir("crf");
  const auto cfg = small_config("indoor_window", 3, 2);
  cli::cmd_simulate(cfg, dir);
  const auto crf = cli::cmd_crf_fit(cfg, dir, dir / "fit");
  const auto rows = csv_lines(dir / "fit" / "crf.csv");
  ASSERT_EQ(rows.size(), 257u);
  EXPECT_EQ(rows[0], "intensity,g_value");
  EXPECT_EQ(rows[129], "128," + cli::num(crf.g_table[128]));
  const auto j = nlohmann::json::parse(read_text_file(dir / "fit" / "crf.json"));
  EXPECT_EQ(j["seed_refs"].size(), 2u);
  EXPECT_EQ(j["alpha"].get<double>(), crf.alpha);
  EXPECT_EQ(j["lambda"].get<double>(), 50.0);
}

TEST(CliOptimize, BudgetOneAndDeterminism) {
  auto cfg = small_config("indoor_checker", 20, 13);
  cfg.control.budget = 1;
  const auto a = scratch_dir("opt_a");
  const auto b = scratch_dir("opt_b");
  cli::cmd_optimize(cfg, a);
  cli::cmd_optimize(cfg, b);
  EXPECT_EQ(csv_lines(a / "trace.csv").size(), 2u);
  EXPECT_EQ(snapshot(a), snapshot(b));
  EXPECT_TRUE(fs::exists(a / "timing.json"));
  const auto r = nlohmann::json::parse(read_text_file(a / "result.json"));
  EXPECT_EQ(r["real_evals"], 3);
  EXPECT_EQ(r["synth_evals"], 1);
}

TEST(CliExhaustive, SurfaceAndBest) {
  const auto out = scratch_dir("exh");
  const auto r = cli::cmd_exhaustive(small_config("dark_window", 4, 3), out);
  EXPECT_EQ(csv_lines(out / "surface.csv").size(), 13u);
  const auto j = nlohmann::json::parse(read_text_file(out / "exhaustive.json"));
  EXPECT_EQ(j["best"]["exposure_ms"].get<double>(), r.best.exposure_ms);
  EXPECT_EQ(j["best_newg"].get<double>(), r.best_score.newg);
}

TEST(CliFormat, TenSignificantDigits) {
  EXPECT_EQ(cli::num(1.0 / 3.0), "0.3333333333");
  EXPECT_EQ(cli::num(20.0), "20");
  EXPECT_EQ(cli::num(-1234567.891234), "-1234567.891");
}

#ifdef AUTOCAM_CLI_PATH
namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(AUTOCAM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

}  // namespace

TEST(CliBinary, ExitCodesAreDistinctPerErrorClass) {
  const auto dir = scratch_dir("bin");
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli(""), 64);
  EXPECT_EQ(run_cli("frobnicate"), 64);
  write_text_file(dir / "bad.json", R"({"control": {"bugdet": 1}})");
  EXPECT_EQ(run_cli("optimize --config " + (dir / "bad.json").string()), 12);
  EXPECT_EQ(run_cli("metric sweep " + (dir / "nothing").string() + " --out " + (dir / "o").string()), 9);
  EXPECT_EQ(run_cli("optimize --scene nowhere --out " + (dir / "o").string()), 2);
  EXPECT_EQ(run_cli("simulate --grid 3 --out " + (dir / "o").string()), 12);
}

TEST(CliBinary, SimulateThenSweepThroughTheTool) {
  const auto dir = scratch_dir("bin_flow");
  const auto data = (dir / "data").string();
  ASSERT_EQ(run_cli("simulate --scene dark_ramp --grid 3x2 --seed 9 --out " + data), 0);
  EXPECT_EQ(count_ext(data, ".pgm"), 6u);
  ASSERT_EQ(run_cli("metric sweep " + data + " --out " + (dir / "sweep").string()), 0);
  EXPECT_EQ(csv_lines(dir / "sweep" / "metric.csv").size(), 7u);
  ASSERT_EQ(run_cli("crf fit " + data + " --out " + (dir / "crf").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "crf" / "crf.json"));
  const auto echo = nlohmann::json::parse(read_text_file(data + "/config.echo.json"));
  EXPECT_EQ(echo["sensor"]["rng_seed"], 9);
  EXPECT_EQ(echo["grid"]["exposure"], 3);
}
#endif
