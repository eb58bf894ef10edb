#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "bspsk/channel.hpp"
#include "bspsk/errors.hpp"
#include "bspsk/receiver.hpp"
#include "bspsk/rng.hpp"
#include "bspsk/scenario.hpp"
#include "bspsk/spectrum.hpp"
#include "bspsk/sweep.hpp"

namespace bspsk {

struct SnrResult {
  SnrEntry snr;
  double sample_snr_db = 0.0; // +inf when noiseless
  double ber = 0.0;
  std::uint64_t n_bits = 0;
  std::uint64_t n_bit_errors = 0;
  double est_rms_error = 0.0; // RMS vs analytic |H|, fraction of its peak
  std::vector<double> per_trial_ber;
};

// One sweep of time-domain context for figure-style output.
struct WaveformDump {
  std::vector<double> t, ramp, tx, rx, envelope;
};

struct TrialReport {
  ScenarioConfig config_echo;
  std::uint64_t seed = 0;
  std::string seed_source = "config";
  std::vector<SnrResult> points;
  TransferEstimate transfer_estimate; // trial 0 at the first SNR point
  std::vector<double> transfer_truth; // analytic |H| on the same grid
  TapEstimate estimated_taps;
  std::vector<double> tap_delay_errors_s; // per configured tap
  bool has_spectrum_check = false;
  SpectrumCheck spectrum_check;
  bool has_waveforms = false;
  WaveformDump waveforms;
  double runtime_s = 0.0;
};

namespace detail {

// Distinct stream salts per pipeline stage so no two draws ever share a key.
enum : std::uint64_t {
  salt_channel = 0xC4A1,
  salt_bits = 0xB175,
  salt_noise = 0xA36E,
  salt_sounding_noise = 0x50D1,
};

inline double rms_vs_truth(const TransferEstimate& est,
                           const std::vector<double>& truth) {
  double peak = 0.0;
  for (double v : truth) peak = std::max(peak, v);
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < est.magnitude.size(); ++i) {
    if (!est.valid[i]) continue;
    const double d = est.magnitude[i] - truth[i];
    acc += d * d;
    ++n;
  }
  return n == 0 ? 0.0 : std::sqrt(acc / static_cast<double>(n)) / peak;
}

inline std::vector<double> tap_delay_errors(const TapEstimate& taps,
                                            const TapProfile& profile) {
  double gmax = 0.0;
  for (double g : taps.gains) gmax = std::max(gmax, g);
  std::vector<std::size_t> dominant;
  for (std::size_t j = 0; j < taps.gains.size(); ++j)
    if (taps.gains[j] >= 0.2 * gmax) dominant.push_back(j);
  std::vector<double> errs;
  for (const auto& tap : profile.taps) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j : dominant)
      best = std::min(best, std::abs(taps.delays_s[j] - tap.delay_s));
    errs.push_back(best);
  }
  return errs;
}

} // namespace detail

// Full pipeline for one configuration: per SNR point and trial, draw a
// channel realization, modulate random data, push it through channel and
// noise, estimate |H| per the configured mode, equalize, demodulate, slice,
// and accumulate bit errors and estimation error. Trials are independently
// seeded by (seed, stage, snr index, trial index) and reduced in index
// order, so the result is identical however the loop is scheduled.
inline TrialReport run_scenario(const ScenarioConfig& cfg,
                                const std::uint64_t* seed_override = nullptr,
                                const std::string& seed_source = "config") {
  const auto t_start = std::chrono::steady_clock::now();
  validate_config(cfg);

  TrialReport report;
  report.config_echo = cfg;
  report.seed = seed_override ? *seed_override : cfg.seed;
  report.seed_source = seed_override ? seed_source : "config";
  const std::uint64_t seed = report.seed;

  const SweepParams& p = cfg.sweep;
  const ModulationParams& mp = cfg.modulation;
  const double fs = cfg.sample_rate;
  const BasisBank bank =
      build_basis_bank(p, mp, fs, cfg.allow_fractional_cycles);
  const int n_sweeps = cfg.sweeps_per_realization;
  const std::size_t sweep_len = bank.bi.size();
  const std::size_t data_len = sweep_len * static_cast<std::size_t>(n_sweeps);
  const int bps = bits_per_symbol(mp);
  const std::size_t bits_per_trial = static_cast<std::size_t>(n_sweeps) *
                                     static_cast<std::size_t>(mp.m) *
                                     static_cast<std::size_t>(bps);
  const double amp = tx_envelope_amplitude(cfg);
  const double tau_max = cfg.profile.max_delay();
  const bool complex_path = cfg.gain_model == GainModel::complex_gains;

  // symbol boundaries inside the first sweep, for modulated-mode masking
  std::vector<double> boundaries;
  for (int k = 1; k < mp.m; ++k)
    boundaries.push_back(-p.T_c / 2.0 + static_cast<double>(k) * mp.T_s);

  // the sounding frame is data-independent; synthesize it once
  RealSignal sounding_tx;
  ComplexSignal sounding_tx_a;
  if (cfg.estimator_mode == EstimatorMode::sounding) {
    if (complex_path)
      sounding_tx_a = synthesize_carrier_analytic(p, fs, 1, amp);
    else
      sounding_tx = synthesize_carrier(p, fs, 1, amp);
  }

  if (cfg.run_spectrum_check) {
    report.spectrum_check = validate_spectrum(p, fs, 8);
    report.has_spectrum_check = true;
  }

  for (std::size_t si = 0; si < cfg.snr_db_list.size(); ++si) {
    const SnrEntry entry = cfg.snr_db_list[si];
    const double snr_db = sample_snr_db(cfg, entry);

    SnrResult res;
    res.snr = entry;
    res.sample_snr_db = snr_db;
    double rms_acc = 0.0;

    for (int ti = 0; ti < cfg.n_trials; ++ti) {
      const ChannelRealization drawn = draw_realization(
          cfg.profile,
          derive_seed(seed, {detail::salt_channel, static_cast<std::uint64_t>(ti)}),
          cfg.channel_mode);
      const ChannelRealization ch =
          complex_path ? drawn : to_real_gains(drawn);

      SplitMix64 bit_rng(derive_seed(
          seed, {detail::salt_bits, si, static_cast<std::uint64_t>(ti)}));
      std::vector<int> bits(bits_per_trial);
      for (auto& b : bits) b = static_cast<int>(bit_rng.next() & 1u);
      const std::vector<IQ> symbols = mpsk_map(bits, mp);

      RealSignal tx_data; // real transmit waveform (dumps need it too)
      RealSignal rx_clean;
      if (complex_path) {
        const ComplexSignal tx = modulate_analytic(symbols, bank, n_sweeps);
        const ComplexSignal rx_a = apply_channel(tx, ch);
        tx_data = RealSignal{std::vector<double>(tx.samples.size()),
                             tx.sample_rate, tx.t0};
        for (std::size_t n = 0; n < tx.samples.size(); ++n)
          tx_data.samples[n] = tx.samples[n].real();
        rx_clean = RealSignal{std::vector<double>(rx_a.samples.size()),
                              rx_a.sample_rate, rx_a.t0};
        for (std::size_t n = 0; n < rx_a.samples.size(); ++n)
          rx_clean.samples[n] = rx_a.samples[n].real();
      } else {
        tx_data = modulate(symbols, bank, n_sweeps);
        rx_clean = apply_channel(tx_data, ch);
      }
      const RealSignal rx = add_awgn(
          rx_clean, snr_db,
          derive_seed(seed, {detail::salt_noise, si,
                             static_cast<std::uint64_t>(ti)}));

      const std::vector<IQ> proj = correlate_demod(head(rx, data_len), bank);

      TransferEstimate est;
      RealSignal est_frame; // the sweep the estimate was computed from
      switch (cfg.estimator_mode) {
        case EstimatorMode::genie:
          est = genie_transfer(ch, p, cfg.transfer_grid_points);
          break;
        case EstimatorMode::sounding: {
          RealSignal snd_clean;
          if (complex_path) {
            const ComplexSignal snd_a = apply_channel(sounding_tx_a, ch);
            snd_clean = RealSignal{std::vector<double>(snd_a.samples.size()),
                                   snd_a.sample_rate, snd_a.t0};
            for (std::size_t n = 0; n < snd_a.samples.size(); ++n)
              snd_clean.samples[n] = snd_a.samples[n].real();
          } else {
            snd_clean = apply_channel(sounding_tx, ch);
          }
          const RealSignal snd_rx = add_awgn(
              snd_clean, snr_db,
              derive_seed(seed, {detail::salt_sounding_noise, si,
                                 static_cast<std::uint64_t>(ti)}));
          est_frame = head(snd_rx, sweep_len);
          est = estimate_transfer(est_frame, p, amp, tau_max, {},
                                  cfg.transfer_grid_points);
          break;
        }
        case EstimatorMode::modulated:
          est_frame = head(rx, sweep_len);
          est = estimate_transfer(est_frame, p, amp, tau_max, boundaries,
                                  cfg.transfer_grid_points);
          break;
      }

      const std::vector<IQ> eq = zf_equalize(proj, est, p, mp);
      const std::vector<int> decided = slicer(eq, mp);
      std::uint64_t errs = 0;
      for (std::size_t b = 0; b < bits.size(); ++b)
        errs += (decided[b] != bits[b]) ? 1u : 0u;
      res.n_bits += bits.size();
      res.n_bit_errors += errs;
      res.per_trial_ber.push_back(static_cast<double>(errs) /
                                  static_cast<double>(bits.size()));

      const auto hc = transfer_function(ch, est.grid);
      std::vector<double> truth(hc.size());
      for (std::size_t i = 0; i < hc.size(); ++i) truth[i] = std::abs(hc[i]);
      rms_acc += detail::rms_vs_truth(est, truth);

      if (si == 0 && ti == 0) {
        report.transfer_estimate = est;
        report.transfer_truth = truth;
        report.estimated_taps = estimate_taps(est);
        report.tap_delay_errors_s =
            detail::tap_delay_errors(report.estimated_taps, cfg.profile);
        if (cfg.emit_waveforms &&
            cfg.estimator_mode != EstimatorMode::genie) {
          // tx column: first sweep of the modulated transmit waveform;
          // rx/envelope columns: the frame the estimator actually consumed
          WaveformDump& wd = report.waveforms;
          const RealSignal env = envelope_detect(est_frame, p, tau_max);
          wd.t.resize(sweep_len);
          wd.ramp.resize(sweep_len);
          wd.tx.resize(sweep_len);
          wd.rx.resize(sweep_len);
          wd.envelope.resize(sweep_len);
          for (std::size_t n = 0; n < sweep_len; ++n) {
            const double t = est_frame.time_at(n);
            wd.t[n] = t;
            wd.ramp[n] = sawtooth(t, p);
            wd.tx[n] = tx_data.samples[n];
            wd.rx[n] = est_frame.samples[n];
            wd.envelope[n] = env.samples[n];
          }
          report.has_waveforms = true;
        }
      }
    }
    res.ber = static_cast<double>(res.n_bit_errors) /
              static_cast<double>(res.n_bits);
    res.est_rms_error = rms_acc / cfg.n_trials;
    report.points.push_back(std::move(res));
  }

  report.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return report;
}

inline nlohmann::ordered_json report_to_json(const TrialReport& r) {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["config_echo"] = config_to_json(r.config_echo);
  j["seed_record"] = {{"seed", r.seed}, {"source", r.seed_source}};
  nlohmann::ordered_json pts = nlohmann::ordered_json::array();
  for (const auto& res : r.points) {
    nlohmann::ordered_json pj;
    if (res.snr.noiseless)
      pj["snr_db"] = "inf";
    else
      pj["snr_db"] = res.snr.db;
    if (std::isinf(res.sample_snr_db))
      pj["sample_snr_db"] = "inf";
    else
      pj["sample_snr_db"] = res.sample_snr_db;
    pj["ber"] = res.ber;
    pj["n_bits"] = res.n_bits;
    pj["n_bit_errors"] = res.n_bit_errors;
    pj["est_rms_error"] = res.est_rms_error;
    pj["per_trial_ber"] = res.per_trial_ber;
    pts.push_back(pj);
  }
  j["snr_points"] = pts;
  j["estimated_taps"] = {{"delays_s", r.estimated_taps.delays_s},
                         {"gains", r.estimated_taps.gains}};
  j["tap_delay_errors_s"] = r.tap_delay_errors_s;
  j["transfer_estimate"] = {
      {"f_start_hz", r.transfer_estimate.grid.f_start},
      {"f_step_hz", r.transfer_estimate.grid.f_step},
      {"n_points", r.transfer_estimate.grid.n_points},
      {"norm_factor", r.transfer_estimate.norm_factor},
      {"valid_fraction", r.transfer_estimate.valid_fraction()}};
  if (r.has_spectrum_check) {
    nlohmann::ordered_json sc;
    sc["mu"] = r.spectrum_check.mu;
    sc["n_periods"] = r.spectrum_check.n_periods;
    sc["used_flattop"] = r.spectrum_check.used_flattop;
    sc["max_rel_error"] = r.spectrum_check.max_rel_error;
    nlohmann::ordered_json lines = nlohmann::ordered_json::array();
    for (const auto& lc : r.spectrum_check.lines) {
      nlohmann::ordered_json lj;
      lj["frequency_hz"] = lc.frequency_hz;
      lj["predicted_mag"] = lc.predicted_mag;
      lj["measured_mag"] = lc.measured_mag;
      if (std::isnan(lc.rel_error))
        lj["rel_error"] = nullptr;
      else
        lj["rel_error"] = lc.rel_error;
      lines.push_back(lj);
    }
    sc["lines"] = lines;
    j["spectrum_check"] = sc;
  }
  j["runtime_s"] = r.runtime_s;
  return j;
}

namespace detail {

inline std::string fmt_g(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw io_error("cannot write " + path.string());
  return out;
}

} // namespace detail

// results.json plus flat CSVs under out_dir. runtime_s is the only field
// that differs between identically seeded runs.
inline void emit_results(const TrialReport& r, const std::string& out_dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw io_error("cannot create output directory " + out_dir + ": " +
                         ec.message());

  {
    auto out = detail::open_out(fs::path(out_dir) / "results.json");
    out << report_to_json(r).dump(2) << '\n';
  }
  {
    auto out = detail::open_out(fs::path(out_dir) / "ber_vs_snr.csv");
    out << "snr_db,ber,n_bits\n";
    for (const auto& res : r.points) {
      out << (res.snr.noiseless ? std::string("inf")
                                : detail::fmt_g(res.snr.db))
          << ',' << detail::fmt_g(res.ber) << ',' << res.n_bits << '\n';
    }
  }
  {
    auto out = detail::open_out(fs::path(out_dir) / "transfer_estimate.csv");
    out << "frequency_hz,mag_true,mag_est,valid\n";
    const auto& h = r.transfer_estimate;
    for (std::size_t i = 0; i < h.grid.n_points; ++i) {
      out << detail::fmt_g(h.grid.frequency(i)) << ','
          << detail::fmt_g(i < r.transfer_truth.size() ? r.transfer_truth[i]
                                                       : 0.0)
          << ',' << detail::fmt_g(h.magnitude[i]) << ','
          << static_cast<int>(h.valid[i]) << '\n';
    }
  }
  if (r.has_spectrum_check) {
    auto out = detail::open_out(fs::path(out_dir) / "spectrum_check.csv");
    out << "frequency_hz,predicted_mag,measured_mag,rel_error\n";
    for (const auto& lc : r.spectrum_check.lines) {
      out << detail::fmt_g(lc.frequency_hz) << ','
          << detail::fmt_g(lc.predicted_mag) << ','
          << detail::fmt_g(lc.measured_mag) << ','
          << (std::isnan(lc.rel_error) ? std::string("")
                                       : detail::fmt_g(lc.rel_error))
          << '\n';
    }
  }
  if (r.has_waveforms) {
    auto out = detail::open_out(fs::path(out_dir) / "waveforms.csv");
    out << "t_s,ramp,tx,rx,envelope\n";
    const auto& wd = r.waveforms;
    for (std::size_t n = 0; n < wd.t.size(); ++n) {
      out << detail::fmt_g(wd.t[n]) << ',' << detail::fmt_g(wd.ramp[n]) << ','
          << detail::fmt_g(wd.tx[n]) << ',' << detail::fmt_g(wd.rx[n]) << ','
          << detail::fmt_g(wd.envelope[n]) << '\n';
    }
  }
}

} // namespace bspsk
