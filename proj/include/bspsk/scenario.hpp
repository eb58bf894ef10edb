#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "bspsk/channel.hpp"
#include "bspsk/errors.hpp"
#include "bspsk/receiver.hpp"
#include "bspsk/spectrum.hpp"
#include "bspsk/sweep.hpp"

namespace bspsk {

enum class EstimatorMode { sounding, modulated, genie };
enum class SnrDefinition { sample, ebn0 };
enum class GainModel { real_gains, complex_gains };

// One entry of snr_db_list; "inf" in the config file means no noise.
struct SnrEntry {
  bool noiseless = false;
  double db = 0.0;
};

struct ScenarioConfig {
  std::string name;
  SweepParams sweep;
  ModulationParams modulation;
  TapProfile profile;
  ChannelMode channel_mode = ChannelMode::fixed;
  GainModel gain_model = GainModel::real_gains;
  std::vector<SnrEntry> snr_db_list;
  SnrDefinition snr_definition = SnrDefinition::sample;
  int n_trials = 1;
  int sweeps_per_realization = 1;
  std::uint64_t seed = 1;
  EstimatorMode estimator_mode = EstimatorMode::sounding;
  double sample_rate = 0.0;
  bool allow_fractional_cycles = false;
  std::size_t transfer_grid_points = 512;
  bool emit_waveforms = false;
  bool run_spectrum_check = false;
};

inline std::string to_string(EstimatorMode m) {
  switch (m) {
    case EstimatorMode::sounding: return "sounding";
    case EstimatorMode::modulated: return "modulated";
    case EstimatorMode::genie: return "genie";
  }
  return "?";
}

inline std::string to_string(SnrDefinition d) {
  return d == SnrDefinition::sample ? "sample" : "ebn0";
}

inline std::string to_string(ChannelMode m) {
  return m == ChannelMode::fixed ? "fixed" : "rayleigh";
}

inline std::string to_string(GainModel g) {
  return g == GainModel::real_gains ? "real" : "complex";
}

inline EstimatorMode estimator_mode_from_string(const std::string& s) {
  if (s == "sounding") return EstimatorMode::sounding;
  if (s == "modulated") return EstimatorMode::modulated;
  if (s == "genie") return EstimatorMode::genie;
  throw config_error("config: unknown estimator_mode \"" + s +
                     "\" (expected sounding, modulated, or genie)");
}

inline SnrDefinition snr_definition_from_string(const std::string& s) {
  if (s == "sample") return SnrDefinition::sample;
  if (s == "ebn0") return SnrDefinition::ebn0;
  throw config_error("config: unknown snr_definition \"" + s +
                     "\" (expected sample or ebn0)");
}

inline ChannelMode channel_mode_from_string(const std::string& s) {
  if (s == "fixed") return ChannelMode::fixed;
  if (s == "rayleigh") return ChannelMode::rayleigh;
  throw config_error("config: unknown channel mode \"" + s +
                     "\" (expected fixed or rayleigh)");
}

inline GainModel gain_model_from_string(const std::string& s) {
  if (s == "real") return GainModel::real_gains;
  if (s == "complex") return GainModel::complex_gains;
  throw config_error("config: unknown gain_model \"" + s +
                     "\" (expected real or complex)");
}

// Transmit envelope amplitude sqrt(2*E_s/T_s); also the sounding-carrier
// amplitude so both frames have the same power.
inline double tx_envelope_amplitude(const ScenarioConfig& cfg) {
  return std::sqrt(2.0 * cfg.modulation.E_s / cfg.modulation.T_s);
}

// Sample-domain SNR actually fed to the noise generator. The ebn0 definition
// converts via Eb/N0 = snr_sample * N_sps / (2*log2 M): a correlator over
// N_sps samples integrates the noise down by the processing gain.
inline double sample_snr_db(const ScenarioConfig& cfg, const SnrEntry& e) {
  if (e.noiseless) return std::numeric_limits<double>::infinity();
  if (cfg.snr_definition == SnrDefinition::sample) return e.db;
  const double n_sps = cfg.sample_rate * cfg.modulation.T_s;
  const double gain = n_sps / (2.0 * bits_per_symbol(cfg.modulation));
  return e.db - 10.0 * std::log10(gain);
}

// Everything a run needs must be provably consistent before any signal is
// synthesized; all violations are config errors with the offending value.
inline void validate_config(const ScenarioConfig& cfg) {
  validate_modulation(cfg.sweep, cfg.modulation, cfg.sample_rate,
                      cfg.allow_fractional_cycles);
  validate_profile(cfg.profile);
  // tap delays must land on the sample grid
  ChannelRealization probe =
      draw_realization(cfg.profile, 0, ChannelMode::fixed);
  detail::delay_samples(probe, cfg.sample_rate);
  if (cfg.n_trials < 1)
    throw config_error("config: n_trials must be >= 1 (an empty report is "
                       "not a run)");
  if (cfg.sweeps_per_realization < 1)
    throw config_error("config: sweeps_per_realization must be >= 1");
  if (cfg.snr_db_list.empty())
    throw config_error("config: snr_db_list must not be empty");
  if (cfg.transfer_grid_points < 16 || cfg.transfer_grid_points % 2 != 0)
    throw config_error("config: transfer_grid_points must be even and >= 16");
  if (cfg.estimator_mode != EstimatorMode::genie) {
    const EnvelopeFilter lpf = design_envelope_filter(
        cfg.sweep, cfg.sample_rate, cfg.profile.max_delay());
    const std::size_t sweep_samples = static_cast<std::size_t>(
        std::llround(cfg.sample_rate * cfg.sweep.T_c));
    if (sweep_samples < lpf.kernel.size())
      throw config_error("config: one sweep (" +
                         std::to_string(sweep_samples) +
                         " samples) is shorter than the envelope filter (" +
                         std::to_string(lpf.kernel.size()) + " taps)");
    // rough transient budget; the estimator enforces the exact mask later
    double masked = 2.0 * lpf.guard_seconds();
    if (cfg.estimator_mode == EstimatorMode::modulated)
      masked += 2.0 * lpf.guard_seconds() * (cfg.modulation.m - 1);
    if (masked > 0.5 * cfg.sweep.T_c)
      throw config_error("config: envelope filter transients would mask more "
                         "than half of each sweep; shorten the filter "
                         "(faster sweep or higher band) or use sounding mode");
  }
  if (cfg.run_spectrum_check && nbfm_mu(cfg.sweep) > nbfm_mu_limit)
    throw config_error("config: spectrum check requested but mu = " +
                       std::to_string(nbfm_mu(cfg.sweep)) +
                       " is outside the narrowband model validity " +
                       std::to_string(nbfm_mu_limit));
}

inline nlohmann::ordered_json config_to_json(const ScenarioConfig& cfg) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["name"] = cfg.name;
  j["sweep"] = {{"omega_c", cfg.sweep.omega_c},
                {"K", cfg.sweep.K},
                {"K_f", cfg.sweep.K_f},
                {"T_c", cfg.sweep.T_c}};
  j["modulation"] = {{"M", cfg.modulation.M},
                     {"T_s", cfg.modulation.T_s},
                     {"E_s", cfg.modulation.E_s},
                     {"m", cfg.modulation.m}};
  nlohmann::ordered_json taps = nlohmann::ordered_json::array();
  for (const auto& t : cfg.profile.taps)
    taps.push_back({{"delay_s", t.delay_s}, {"power_db", t.power_db}});
  j["channel"] = {{"mode", to_string(cfg.channel_mode)},
                  {"gain_model", to_string(cfg.gain_model)},
                  {"taps", taps}};
  nlohmann::ordered_json snrs = nlohmann::ordered_json::array();
  for (const auto& e : cfg.snr_db_list) {
    if (e.noiseless)
      snrs.push_back("inf");
    else
      snrs.push_back(e.db);
  }
  j["snr_db_list"] = snrs;
  j["snr_definition"] = to_string(cfg.snr_definition);
  j["n_trials"] = cfg.n_trials;
  j["sweeps_per_realization"] = cfg.sweeps_per_realization;
  j["seed"] = cfg.seed;
  j["estimator_mode"] = to_string(cfg.estimator_mode);
  j["sample_rate"] = cfg.sample_rate;
  j["allow_fractional_cycles"] = cfg.allow_fractional_cycles;
  j["transfer_grid_points"] = cfg.transfer_grid_points;
  j["emit_waveforms"] = cfg.emit_waveforms;
  j["spectrum_check"] = cfg.run_spectrum_check;
  return j;
}

inline ScenarioConfig config_from_json(const nlohmann::json& j) {
  ScenarioConfig cfg;
  try {
    cfg.name = j.value("name", std::string{});
    const auto& sw = j.at("sweep");
    cfg.sweep.omega_c = sw.at("omega_c").get<double>();
    cfg.sweep.K = sw.at("K").get<double>();
    cfg.sweep.K_f = sw.at("K_f").get<double>();
    cfg.sweep.T_c = sw.at("T_c").get<double>();
    const auto& mo = j.at("modulation");
    cfg.modulation.M = mo.at("M").get<int>();
    cfg.modulation.T_s = mo.at("T_s").get<double>();
    cfg.modulation.E_s = mo.at("E_s").get<double>();
    cfg.modulation.m = mo.at("m").get<int>();
    const auto& ch = j.at("channel");
    cfg.channel_mode = channel_mode_from_string(ch.at("mode").get<std::string>());
    cfg.gain_model =
        gain_model_from_string(ch.value("gain_model", std::string("real")));
    for (const auto& t : ch.at("taps"))
      cfg.profile.taps.push_back(
          {t.at("delay_s").get<double>(), t.at("power_db").get<double>()});
    for (const auto& e : j.at("snr_db_list")) {
      if (e.is_string()) {
        if (e.get<std::string>() != "inf")
          throw config_error("config: snr_db_list entries must be numbers or "
                             "\"inf\", got \"" + e.get<std::string>() + "\"");
        cfg.snr_db_list.push_back({true, 0.0});
      } else {
        cfg.snr_db_list.push_back({false, e.get<double>()});
      }
    }
    cfg.snr_definition = snr_definition_from_string(
        j.value("snr_definition", std::string("sample")));
    cfg.n_trials = j.at("n_trials").get<int>();
    cfg.sweeps_per_realization = j.value("sweeps_per_realization", 1);
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.estimator_mode =
        estimator_mode_from_string(j.at("estimator_mode").get<std::string>());
    cfg.sample_rate = j.at("sample_rate").get<double>();
    cfg.allow_fractional_cycles = j.value("allow_fractional_cycles", false);
    cfg.transfer_grid_points = j.value("transfer_grid_points", std::size_t{512});
    cfg.emit_waveforms = j.value("emit_waveforms", false);
    cfg.run_spectrum_check = j.value("spectrum_check", false);
  } catch (const nlohmann::json::exception& e) {
    throw config_error(std::string("config: ") + e.what());
  }
  return cfg;
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw config_error("config: " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j);
}

// The paper_fig12 preset reproduces the published constants verbatim for
// figure-level output; they sweep only 0.45 Hz of band, far too narrow to
// resolve a 1 us delay spread, so the quantitative presets use a
// self-consistent parameter set with the same two-ray channel.
inline ScenarioConfig preset(const std::string& name) {
  const double two_pi = 2.0 * std::numbers::pi;
  ScenarioConfig cfg;
  cfg.name = name;
  if (name == "selfconsistent_2tap") {
    cfg.sweep = {two_pi * 1e7, 1.0, two_pi * 4e9, 1e-3}; // B_Hz = 4 MHz
    cfg.modulation = {2, 2e-5, 1.0, 50};
    cfg.profile.taps = {{0.0, 0.0}, {1e-6, -4.0}};
    cfg.channel_mode = ChannelMode::fixed;
    cfg.snr_db_list = {{true, 0.0}, {false, 20.0}};
    cfg.snr_definition = SnrDefinition::sample;
    cfg.n_trials = 4;
    cfg.sweeps_per_realization = 1;
    cfg.seed = 913151;
    cfg.estimator_mode = EstimatorMode::sounding;
    // 250 MHz keeps every rectifier harmonic 2k*f of the 8..12 MHz band,
    // k <= 10, clear of the sample-rate multiples; at 96 MHz the k = 4..6
    // harmonics alias straight onto DC and corrupt the envelope by 1-3%.
    cfg.sample_rate = 2.5e8;
  } else if (name == "flat_awgn") {
    cfg.sweep = {two_pi * 1e6, 1.0, two_pi * 4e8, 1e-3}; // B_Hz = 400 kHz
    cfg.modulation = {2, 5e-5, 1.0, 20};
    cfg.profile.taps = {{0.0, 0.0}};
    cfg.channel_mode = ChannelMode::fixed;
    cfg.snr_db_list = {{false, 0.0}, {false, 2.0}, {false, 4.0},
                       {false, 6.0}, {false, 8.0}};
    cfg.snr_definition = SnrDefinition::ebn0;
    cfg.n_trials = 100;
    cfg.sweeps_per_realization = 100; // 2e5 bits per SNR point
    cfg.seed = 424742;
    cfg.estimator_mode = EstimatorMode::sounding;
    cfg.sample_rate = 9.6e6;
  } else if (name == "paper_fig12") {
    cfg.sweep = {1e5, 0.75, 120.0, 31.25e-3}; // B = 2.8125 rad/s
    cfg.modulation = {2, 6.25e-3, 1.0, 5};
    cfg.profile.taps = {{0.0, 0.0}, {1e-6, -4.0}};
    cfg.channel_mode = ChannelMode::fixed;
    cfg.snr_db_list = {{true, 0.0}, {false, 20.0}};
    cfg.snr_definition = SnrDefinition::sample;
    cfg.n_trials = 1;
    cfg.sweeps_per_realization = 1;
    cfg.seed = 550131;
    cfg.estimator_mode = EstimatorMode::sounding;
    cfg.sample_rate = 1e6;
    cfg.allow_fractional_cycles = true; // omega_c*T_s is not whole cycles
    cfg.emit_waveforms = true;
    cfg.run_spectrum_check = true;
  } else {
    throw config_error("unknown preset \"" + name +
                       "\" (available: selfconsistent_2tap, flat_awgn, "
                       "paper_fig12)");
  }
  validate_config(cfg);
  return cfg;
}

inline std::vector<std::string> preset_names() {
  return {"selfconsistent_2tap", "flat_awgn", "paper_fig12"};
}

} // namespace bspsk
