#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bspsk/runner.hpp"

using namespace bspsk;

namespace {

// Trimmed-down two-tap scenario: same physics as the full preset, few trials.
ScenarioConfig quick_cfg() {
  auto cfg = preset("selfconsistent_2tap");
  cfg.name = "quick";
  cfg.n_trials = 2;
  cfg.sweeps_per_realization = 1;
  cfg.snr_db_list = {{true, 0.0}, {false, -30.0}}; // second point is noisy
  cfg.snr_definition = SnrDefinition::sample;
  cfg.seed = 77;
  return cfg;
}

nlohmann::ordered_json strip_runtime(const TrialReport& r) {
  auto j = report_to_json(r);
  j.erase("runtime_s");
  return j;
}

} // namespace

TEST_CASE("pooled BER is the average of per-trial BERs") {
  const auto report = run_scenario(quick_cfg());
  REQUIRE(report.points.size() == 2);
  for (const auto& pt : report.points) {
    REQUIRE(pt.per_trial_ber.size() == 2);
    CHECK(pt.n_bits == 100); // 2 trials x 1 sweep x 50 BPSK symbols
    double mean = 0.0;
    for (double b : pt.per_trial_ber) mean += b;
    mean /= static_cast<double>(pt.per_trial_ber.size());
    CHECK(pt.ber == Catch::Approx(mean).margin(1e-12));
    CHECK(pt.ber >= 0.0);
    CHECK(pt.ber <= 1.0);
  }
  // noiseless two-tap with a sounding estimate decodes clean
  CHECK(report.points[0].n_bit_errors == 0);
  // -30 dB per sample leaves about -2 dB per bit, so errors must show up
  CHECK(report.points[1].n_bit_errors > 0);
}

TEST_CASE("identical configs reproduce identical reports") {
  const auto a = run_scenario(quick_cfg());
  const auto b = run_scenario(quick_cfg());
  CHECK(strip_runtime(a) == strip_runtime(b));
}

TEST_CASE("seed override is recorded and changes the draw") {
  const auto cfg = quick_cfg();
  const std::uint64_t seed = 7;
  const auto a = run_scenario(cfg, &seed, "environment");
  CHECK(a.seed == 7);
  CHECK(a.seed_source == "environment");
  CHECK(a.config_echo.seed == cfg.seed); // echo keeps the file value

  const auto b = run_scenario(cfg);
  CHECK(b.seed == cfg.seed);
  CHECK(b.seed_source == "config");
  CHECK(strip_runtime(a) != strip_runtime(b));
}

TEST_CASE("estimate quality fields are populated") {
  const auto report = run_scenario(quick_cfg());
  const auto cfg = quick_cfg();
  CHECK(report.transfer_estimate.magnitude.size() == cfg.transfer_grid_points);
  CHECK(report.transfer_truth.size() == cfg.transfer_grid_points);
  CHECK(report.transfer_estimate.valid_fraction() > 0.5);
  CHECK(report.points[0].est_rms_error >= 0.0);
  CHECK(report.points[0].est_rms_error < 0.05);
  REQUIRE(report.tap_delay_errors_s.size() == 2);
  for (double e : report.tap_delay_errors_s) CHECK(e <= 0.25e-6);
}

TEST_CASE("genie mode skips waveform capture and nails the truth") {
  auto cfg = quick_cfg();
  cfg.estimator_mode = EstimatorMode::genie;
  cfg.emit_waveforms = true;
  const auto report = run_scenario(cfg);
  CHECK_FALSE(report.has_waveforms);
  CHECK(report.points[0].est_rms_error < 1e-12);
  CHECK(report.points[0].n_bit_errors == 0);
}

TEST_CASE("waveform dump covers exactly one sweep") {
  auto cfg = quick_cfg();
  cfg.snr_db_list = {{true, 0.0}};
  cfg.n_trials = 1;
  cfg.emit_waveforms = true;
  const auto report = run_scenario(cfg);
  REQUIRE(report.has_waveforms);
  const auto n = static_cast<std::size_t>(
      std::llround(cfg.sample_rate * cfg.sweep.T_c));
  CHECK(report.waveforms.t.size() == n);
  CHECK(report.waveforms.ramp.size() == n);
  CHECK(report.waveforms.tx.size() == n);
  CHECK(report.waveforms.rx.size() == n);
  CHECK(report.waveforms.envelope.size() == n);
  // envelope is a rectified carrier level, strictly positive mid-sweep
  CHECK(report.waveforms.envelope[n / 2] > 0.0);
  // ramp spans the wrapped interval
  CHECK(report.waveforms.ramp.front() == Catch::Approx(-cfg.sweep.T_c / 2));
}

TEST_CASE("rayleigh complex-gain scenario runs end to end") {
  auto cfg = quick_cfg();
  cfg.channel_mode = ChannelMode::rayleigh;
  cfg.gain_model = GainModel::complex_gains;
  cfg.n_trials = 3;
  cfg.snr_db_list = {{false, 10.0}};
  const auto report = run_scenario(cfg);
  REQUIRE(report.points.size() == 1);
  CHECK(report.points[0].n_bits == 150);
  CHECK(std::isfinite(report.points[0].ber));
  CHECK(std::isfinite(report.points[0].est_rms_error));
  // different trials draw different channels
  const auto& per = report.points[0].per_trial_ber;
  const bool all_same = per[0] == per[1] && per[1] == per[2];
  CHECK((!all_same || per[0] == 0.0));
}

TEST_CASE("spectrum check is attached when requested") {
  auto cfg = quick_cfg();
  // narrowband settings so the six-line model applies
  cfg.sweep = {2.0 * std::numbers::pi * 1000.0, 1.0,
               0.05 * 2.0 * std::numbers::pi * std::numbers::pi, 1.0};
  cfg.modulation = {2, 0.25, 1.0, 4};
  cfg.profile = {{{0.0, 0.0}}};
  cfg.sample_rate = 8192.0;
  cfg.estimator_mode = EstimatorMode::genie;
  cfg.snr_db_list = {{true, 0.0}};
  cfg.n_trials = 1;
  cfg.run_spectrum_check = true;
  const auto report = run_scenario(cfg);
  REQUIRE(report.has_spectrum_check);
  CHECK(report.spectrum_check.max_rel_error < 0.05);
}

TEST_CASE("report json layout") {
  const auto report = run_scenario(quick_cfg());
  const auto j = report_to_json(report);
  CHECK(j.contains("config_echo"));
  CHECK(j["seed_record"]["seed"] == 77);
  CHECK(j["seed_record"]["source"] == "config");
  REQUIRE(j["snr_points"].size() == 2);
  CHECK(j["snr_points"][0]["snr_db"] == "inf");
  CHECK(j["snr_points"][1]["snr_db"] == -30.0);
  CHECK(j["snr_points"][0]["per_trial_ber"].size() == 2);
  CHECK(j["transfer_estimate"]["n_points"] == 512);
  CHECK(j.contains("runtime_s"));
  // config echo round-trips back into an identical config
  const auto echoed = config_from_json(j["config_echo"]);
  CHECK(config_to_json(echoed) == config_to_json(quick_cfg()));
}

TEST_CASE("emit_results writes the documented files") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "bspsk_runner_emit";
  fs::remove_all(dir);
  fs::create_directories(dir);

  auto cfg = quick_cfg();
  cfg.emit_waveforms = true;
  const auto report = run_scenario(cfg);
  emit_results(report, dir.string());

  REQUIRE(fs::exists(dir / "results.json"));
  REQUIRE(fs::exists(dir / "ber_vs_snr.csv"));
  REQUIRE(fs::exists(dir / "transfer_estimate.csv"));
  REQUIRE(fs::exists(dir / "waveforms.csv"));

  // results.json parses back to exactly the in-memory report
  std::ifstream in(dir / "results.json");
  const auto parsed = nlohmann::ordered_json::parse(in);
  CHECK(parsed == report_to_json(report));

  // transfer CSV: header plus one row per grid point
  std::ifstream tf(dir / "transfer_estimate.csv");
  std::string line;
  std::size_t rows = 0;
  std::getline(tf, line);
  CHECK(line == "frequency_hz,mag_true,mag_est,valid");
  while (std::getline(tf, line))
    if (!line.empty()) ++rows;
  CHECK(rows == cfg.transfer_grid_points);

  // BER CSV: header plus one row per SNR point, inf spelled out
  std::ifstream bf(dir / "ber_vs_snr.csv");
  std::getline(bf, line);
  CHECK(line == "snr_db,ber,n_bits");
  std::getline(bf, line);
  CHECK(line.substr(0, 4) == "inf,");

  fs::remove_all(dir);
}

TEST_CASE("invalid configs are rejected before any work happens") {
  auto cfg = quick_cfg();
  cfg.n_trials = 0;
  CHECK_THROWS_AS(run_scenario(cfg), config_error);
}
