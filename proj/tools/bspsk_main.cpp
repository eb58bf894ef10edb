// bspsk command line: run scenarios, write preset configs, check the
// narrowband spectrum model against a synthesized sweep.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "bspsk/bspsk.hpp"

namespace {

constexpr const char* version_string = "bspsk 1.0.0";

// BSPSK_SEED in the environment overrides the config seed.
bool seed_from_env(std::uint64_t& seed) {
  const char* env = std::getenv("BSPSK_SEED");
  if (!env || !*env) return false;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (end == env || *end != '\0')
    throw bspsk::config_error(std::string("BSPSK_SEED is not an integer: ") +
                              env);
  seed = v;
  return true;
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  bspsk::ScenarioConfig cfg = bspsk::load_config(config_path);
  std::uint64_t seed = 0;
  bspsk::TrialReport report;
  if (seed_from_env(seed))
    report = bspsk::run_scenario(cfg, &seed, "environment");
  else
    report = bspsk::run_scenario(cfg);
  bspsk::emit_results(report, out_dir);
  for (const auto& pt : report.points) {
    std::printf("snr_db=%s ber=%.6g (%llu/%llu bits) est_rms=%.4g\n",
                pt.snr.noiseless ? "inf" : std::to_string(pt.snr.db).c_str(),
                pt.ber, static_cast<unsigned long long>(pt.n_bit_errors),
                static_cast<unsigned long long>(pt.n_bits), pt.est_rms_error);
  }
  std::printf("results written to %s (%.2f s)\n", out_dir.c_str(),
              report.runtime_s);
  return 0;
}

int cmd_preset(const std::string& name, const std::string& out_dir) {
  const bspsk::ScenarioConfig cfg = bspsk::preset(name);
  std::filesystem::create_directories(out_dir);
  const auto path = std::filesystem::path(out_dir) / (name + ".json");
  std::ofstream out(path);
  if (!out) throw bspsk::io_error("cannot write " + path.string());
  out << bspsk::config_to_json(cfg).dump(2) << '\n';
  std::printf("wrote %s\n", path.string().c_str());
  return 0;
}

int cmd_validate_spectrum(const std::string& config_path,
                          const std::string& out_dir, int n_periods) {
  const bspsk::ScenarioConfig cfg = bspsk::load_config(config_path);
  bspsk::SpectrumCheck check;
  try {
    check = bspsk::validate_spectrum(cfg.sweep, cfg.sample_rate, n_periods);
  } catch (const bspsk::domain_error& e) {
    // out-of-validity mu is a configuration problem for this subcommand
    throw bspsk::config_error(e.what());
  }
  std::printf("mu=%.6g window=%s\n", check.mu,
              check.used_flattop ? "flattop" : "rectangular");
  for (const auto& lc : check.lines) {
    if (lc.predicted_mag > 0.0)
      std::printf("f=%.6g Hz predicted=%.6g measured=%.6g rel_error=%.4g\n",
                  lc.frequency_hz, lc.predicted_mag, lc.measured_mag,
                  lc.rel_error);
    else
      std::printf("f=%.6g Hz predicted=0 measured=%.3g\n", lc.frequency_hz,
                  lc.measured_mag);
  }
  std::printf("max relative error over modeled lines: %.4g\n",
              check.max_rel_error);
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const auto path = std::filesystem::path(out_dir) / "spectrum_check.csv";
    std::ofstream out(path);
    if (!out) throw bspsk::io_error("cannot write " + path.string());
    out << "frequency_hz,predicted_mag,measured_mag,rel_error\n";
    for (const auto& lc : check.lines) {
      char buf[160];
      if (lc.predicted_mag > 0.0)
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,%.12g\n",
                      lc.frequency_hz, lc.predicted_mag, lc.measured_mag,
                      lc.rel_error);
      else
        std::snprintf(buf, sizeof buf, "%.12g,%.12g,%.12g,\n", lc.frequency_hz,
                      lc.predicted_mag, lc.measured_mag);
      out << buf;
    }
    std::printf("wrote %s\n", path.string().c_str());
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"band-sweeping M-ary PSK simulator"};
  app.require_subcommand(1);

  std::string config_path, out_dir, preset_name;
  int n_periods = 8;

  auto* run = app.add_subcommand("run", "run a scenario config");
  run->add_option("--config", config_path, "scenario config JSON")->required();
  run->add_option("--out", out_dir, "output directory")->required();

  auto* pre = app.add_subcommand("preset", "write a built-in preset config");
  pre->add_option("name", preset_name, "preset name")->required();
  pre->add_option("--out", out_dir, "output directory")->required();

  auto* val = app.add_subcommand("validate-spectrum",
                                 "check the narrowband line model against a "
                                 "synthesized sweep");
  val->add_option("--config", config_path, "scenario config JSON")->required();
  val->add_option("--out", out_dir, "optional directory for spectrum_check.csv");
  val->add_option("--n-periods", n_periods, "sweep periods to synthesize");

  auto* ver = app.add_subcommand("version", "print version");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // treat bad command lines as config errors, except --help
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, out_dir);
    if (pre->parsed()) return cmd_preset(preset_name, out_dir);
    if (val->parsed())
      return cmd_validate_spectrum(config_path, out_dir, n_periods);
    if (ver->parsed()) {
      std::printf("%s\n", version_string);
      return 0;
    }
  } catch (const bspsk::config_error& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
