#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "bspsk/errors.hpp"
#include "bspsk/signal.hpp"

namespace bspsk {

// The sweep quadruple. The carrier is frequency-modulated by a periodic
// sawtooth ramp K*t' of period T_c, so its instantaneous frequency sweeps
// linearly across a band of width B = K_f*K*T_c rad/s once per period.
struct SweepParams {
  double omega_c = 0.0; // carrier angular frequency, rad/s
  double K = 0.0;       // ramp slope, ramp units per second
  double K_f = 0.0;     // FM constant, rad/s per ramp unit
  double T_c = 0.0;     // sweep period = channel coherence time, s
};

// Swept bandwidth in rad/s.
inline double sweep_bandwidth(const SweepParams& p) {
  return p.K_f * p.K * p.T_c;
}

inline double sweep_bandwidth_hz(const SweepParams& p) {
  return sweep_bandwidth(p) / (2.0 * std::numbers::pi);
}

inline double carrier_hz(const SweepParams& p) {
  return p.omega_c / (2.0 * std::numbers::pi);
}

// Lowest and highest instantaneous frequencies, Hz.
inline double sweep_f_min_hz(const SweepParams& p) {
  return carrier_hz(p) - sweep_bandwidth_hz(p) / 2.0;
}
inline double sweep_f_max_hz(const SweepParams& p) {
  return carrier_hz(p) + sweep_bandwidth_hz(p) / 2.0;
}

// K and K_f may be zero (unswept carrier); that degenerate case is used by
// tests and by the narrowband spectrum in its K_f -> 0 limit.
inline void validate_sweep(const SweepParams& p) {
  if (!(p.omega_c > 0.0)) throw config_error("sweep: omega_c must be > 0");
  if (!(p.K >= 0.0)) throw config_error("sweep: K must be >= 0");
  if (!(p.K_f >= 0.0)) throw config_error("sweep: K_f must be >= 0");
  if (!(p.T_c > 0.0)) throw config_error("sweep: T_c must be > 0");
  if (!(p.omega_c - sweep_bandwidth(p) / 2.0 > 0.0))
    throw config_error("sweep: swept band reaches zero or negative frequency "
                       "(omega_c - B/2 <= 0)");
}

// Wrap t into the symmetric period [-T_c/2, T_c/2).
inline double wrap_to_period(double t, double T_c) {
  return t - T_c * std::floor(t / T_c + 0.5);
}

// Periodic ramp K*t' on the symmetric period.
inline double sawtooth(double t, const SweepParams& p) {
  return p.K * wrap_to_period(t, p.T_c);
}

// Running integral of the wrapped ramp with Phi(-T_c/2) = 0. Within one
// period it is K*(t'^2 - (T_c/2)^2)/2; the ramp is odd, so each full period
// integrates to exactly zero and Phi is continuous and T_c-periodic. Using
// the closed form instead of accumulating numerically keeps the phase free
// of drift over arbitrarily many sweeps.
inline double sawtooth_integral(double t, const SweepParams& p) {
  const double tp = wrap_to_period(t, p.T_c);
  const double half = p.T_c / 2.0;
  return p.K * (tp * tp - half * half) / 2.0;
}

// Total instantaneous phase theta(t) = omega_c*t + K_f*Phi(t).
inline double sweep_phase(double t, const SweepParams& p) {
  return p.omega_c * t + p.K_f * sawtooth_integral(t, p);
}

// d theta/dt = omega_c + K_f*K*t', piecewise linear and T_c-periodic, rad/s.
inline double instantaneous_frequency(double t, const SweepParams& p) {
  return p.omega_c + p.K_f * p.K * wrap_to_period(t, p.T_c);
}

inline double instantaneous_frequency_hz(double t, const SweepParams& p) {
  return instantaneous_frequency(t, p) / (2.0 * std::numbers::pi);
}

// Passband sampling floor: 8x the highest instantaneous frequency. Leaves
// room for the envelope detector and keeps rectangle-rule integrals tight.
inline double min_sample_rate(const SweepParams& p) {
  return 8.0 * sweep_f_max_hz(p);
}

// Constellation order, symbol slot length, symbol energy, symbols per sweep.
struct ModulationParams {
  int M = 2;        // power of two
  double T_s = 0.0; // symbol duration, s
  double E_s = 1.0; // symbol energy
  int m = 1;        // symbols per sweep, T_c = m*T_s
};

inline int bits_per_symbol(const ModulationParams& mp) {
  int b = 0;
  for (int v = mp.M; v > 1; v >>= 1) ++b;
  return b;
}

// allow_fractional_cycles relaxes the integer-carrier-cycles rule for
// parameter sets whose omega_c*T_s is not a whole number of cycles (the
// figure-reproduction preset needs this); everything else still holds.
inline void validate_modulation(const SweepParams& p, const ModulationParams& mp,
                                double sample_rate,
                                bool allow_fractional_cycles = false) {
  validate_sweep(p);
  if (mp.M < 2 || (mp.M & (mp.M - 1)) != 0)
    throw config_error("modulation: M must be a power of two >= 2");
  if (!(mp.E_s > 0.0)) throw config_error("modulation: E_s must be > 0");
  if (mp.m < 1) throw config_error("modulation: m must be >= 1");
  if (!(mp.T_s > 0.0)) throw config_error("modulation: T_s must be > 0");
  if (std::abs(p.T_c - static_cast<double>(mp.m) * mp.T_s) > 1e-9 * p.T_c)
    throw config_error("modulation: T_c must equal m*T_s exactly");
  const double cycles = carrier_hz(p) * mp.T_s;
  if (!allow_fractional_cycles &&
      std::abs(cycles - std::round(cycles)) > 1e-6)
    throw config_error("modulation: omega_c*T_s is " + std::to_string(cycles) +
                       " carrier cycles; an integer count is required "
                       "(set allow_fractional_cycles to override)");
  if (!(sample_rate >= min_sample_rate(p) * (1.0 - 1e-12)))
    throw config_error("sample rate " + std::to_string(sample_rate) +
                       " Hz is below the required oversampling floor of " +
                       std::to_string(min_sample_rate(p)) + " Hz");
  const double sps = sample_rate * mp.T_s;
  if (std::abs(sps - std::round(sps)) > 1e-6)
    throw config_error("modulation: sample_rate*T_s = " + std::to_string(sps) +
                       " must be an integer number of samples per symbol");
}

inline std::size_t samples_per_symbol(const ModulationParams& mp,
                                      double sample_rate) {
  return static_cast<std::size_t>(std::llround(sample_rate * mp.T_s));
}

// Unmodulated sweeping carrier amplitude*cos(theta(t)) over n_periods sweeps,
// starting at the sweep edge t = -T_c/2.
inline RealSignal synthesize_carrier(const SweepParams& p, double sample_rate,
                                     int n_periods, double amplitude = 1.0) {
  validate_sweep(p);
  if (n_periods < 1) throw config_error("synthesize_carrier: n_periods must be >= 1");
  if (!(sample_rate >= min_sample_rate(p) * (1.0 - 1e-12)))
    throw config_error("synthesize_carrier: sample rate below oversampling floor");
  const double t0 = -p.T_c / 2.0;
  const std::size_t n =
      static_cast<std::size_t>(std::llround(sample_rate * p.T_c * n_periods));
  RealSignal s{std::vector<double>(n), sample_rate, t0};
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t0 + static_cast<double>(i) / sample_rate;
    s.samples[i] = amplitude * std::cos(sweep_phase(t, p));
  }
  return s;
}

// The two sweeping basis waveforms for every symbol slot of one sweep,
// sampled once and reused: slot k of sweep j differs from slot k of sweep 0
// only by the fixed phase advance omega_c*T_c per sweep (the ramp part of
// theta is T_c-periodic), which is applied as a rotation of the symbol,
// not by resampling the basis.
struct BasisBank {
  std::vector<double> bi; // sqrt(2/T_s)*cos(theta), one full sweep
  std::vector<double> bq; // sqrt(2/T_s)*sin(theta)
  std::size_t sps = 0;    // samples per symbol slot
  int m = 0;              // slots per sweep
  double sample_rate = 0.0;
  double t0 = 0.0;                  // -T_c/2
  double phase_per_sweep = 0.0;     // omega_c*T_c mod 2*pi
};

inline BasisBank build_basis_bank(const SweepParams& p,
                                  const ModulationParams& mp,
                                  double sample_rate,
                                  bool allow_fractional_cycles = false) {
  validate_modulation(p, mp, sample_rate, allow_fractional_cycles);
  BasisBank bank;
  bank.sps = samples_per_symbol(mp, sample_rate);
  bank.m = mp.m;
  bank.sample_rate = sample_rate;
  bank.t0 = -p.T_c / 2.0;
  bank.phase_per_sweep =
      std::fmod(p.omega_c * p.T_c, 2.0 * std::numbers::pi);
  const std::size_t n = bank.sps * static_cast<std::size_t>(mp.m);
  bank.bi.resize(n);
  bank.bq.resize(n);
  const double amp = std::sqrt(2.0 / mp.T_s);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = bank.t0 + static_cast<double>(i) / sample_rate;
    const double th = sweep_phase(t, p);
    bank.bi[i] = amp * std::cos(th);
    bank.bq[i] = amp * std::sin(th);
  }
  return bank;
}

// In-phase / quadrature basis pair over one symbol slot of the first sweep.
inline std::pair<RealSignal, RealSignal> basis_pair(const SweepParams& p,
                                                    const ModulationParams& mp,
                                                    int symbol_index,
                                                    double sample_rate) {
  if (symbol_index < 0 || symbol_index >= mp.m)
    throw config_error("basis_pair: symbol_index out of range");
  validate_modulation(p, mp, sample_rate, true);
  const std::size_t sps = samples_per_symbol(mp, sample_rate);
  const double t0 = -p.T_c / 2.0 + static_cast<double>(symbol_index) * mp.T_s;
  RealSignal vi{std::vector<double>(sps), sample_rate, t0};
  RealSignal vq{std::vector<double>(sps), sample_rate, t0};
  const double amp = std::sqrt(2.0 / mp.T_s);
  for (std::size_t i = 0; i < sps; ++i) {
    const double t = t0 + static_cast<double>(i) / sample_rate;
    const double th = sweep_phase(t, p);
    vi.samples[i] = amp * std::cos(th);
    vq.samples[i] = amp * std::sin(th);
  }
  return {std::move(vi), std::move(vq)};
}

struct IQ {
  double i = 0.0;
  double q = 0.0;
};

// Gray bit labels around the circle, chosen so the all-ones symbol sits at
// angle 0; for M = 2 that puts bit 1 at +sqrt(E_s) and bit 0 at -sqrt(E_s).
inline std::vector<int> mpsk_labels(int M) {
  std::vector<int> labels(static_cast<std::size_t>(M));
  for (int k = 0; k < M; ++k)
    labels[static_cast<std::size_t>(k)] = (k ^ (k >> 1)) ^ (M - 1);
  return labels;
}

// Map a bit stream onto the constant-energy circle of radius sqrt(E_s).
inline std::vector<IQ> mpsk_map(const std::vector<int>& bits,
                                const ModulationParams& mp) {
  const int bps = bits_per_symbol(mp);
  if (bits.size() % static_cast<std::size_t>(bps) != 0)
    throw framing_error("mpsk_map: bit count " + std::to_string(bits.size()) +
                        " is not divisible by log2(M) = " + std::to_string(bps));
  const std::vector<int> labels = mpsk_labels(mp.M);
  std::vector<int> point_of(static_cast<std::size_t>(mp.M));
  for (int k = 0; k < mp.M; ++k)
    point_of[static_cast<std::size_t>(labels[static_cast<std::size_t>(k)])] = k;

  const double r = std::sqrt(mp.E_s);
  std::vector<IQ> out;
  out.reserve(bits.size() / static_cast<std::size_t>(bps));
  for (std::size_t n = 0; n < bits.size(); n += static_cast<std::size_t>(bps)) {
    int v = 0;
    for (int b = 0; b < bps; ++b) {
      const int bit = bits[n + static_cast<std::size_t>(b)];
      if (bit != 0 && bit != 1)
        throw framing_error("mpsk_map: bits must be 0 or 1");
      v = (v << 1) | bit;
    }
    const int k = point_of[static_cast<std::size_t>(v)];
    const double ang =
        2.0 * std::numbers::pi * static_cast<double>(k) / mp.M;
    out.push_back({r * std::cos(ang), r * std::sin(ang)});
  }
  return out;
}

// Transmit waveform: per slot, i_k*basis_i + q_k*basis_q, hard-keyed at slot
// boundaries (no pulse shaping; shaping would break the constant envelope
// the estimator depends on).
inline RealSignal modulate(const std::vector<IQ>& symbols, const BasisBank& bank,
                           int n_sweeps) {
  const std::size_t need =
      static_cast<std::size_t>(n_sweeps) * static_cast<std::size_t>(bank.m);
  if (symbols.size() < need)
    throw framing_error("modulate: " + std::to_string(symbols.size()) +
                        " symbols provided, " + std::to_string(need) +
                        " needed for " + std::to_string(n_sweeps) + " sweep(s)");
  const std::size_t sweep_len = bank.bi.size();
  RealSignal out{std::vector<double>(sweep_len * static_cast<std::size_t>(n_sweeps)),
                 bank.sample_rate, bank.t0};
  double delta = 0.0;
  for (int j = 0; j < n_sweeps; ++j) {
    const double c = std::cos(delta);
    const double s = std::sin(delta);
    double* dst = out.samples.data() + sweep_len * static_cast<std::size_t>(j);
    for (int k = 0; k < bank.m; ++k) {
      const IQ sym = symbols[static_cast<std::size_t>(j) *
                                 static_cast<std::size_t>(bank.m) +
                             static_cast<std::size_t>(k)];
      // rotate the symbol by -delta so the sweep-0 basis can be tiled
      const double ir = sym.i * c + sym.q * s;
      const double qr = sym.q * c - sym.i * s;
      const std::size_t off = static_cast<std::size_t>(k) * bank.sps;
      for (std::size_t n = 0; n < bank.sps; ++n)
        dst[off + n] = ir * bank.bi[off + n] + qr * bank.bq[off + n];
    }
    delta = std::fmod(delta + bank.phase_per_sweep, 2.0 * std::numbers::pi);
  }
  return out;
}

// Analytic-signal form of the transmit waveform: the real waveform is its
// real part. Needed when channel taps carry complex gains, which rotate the
// carrier phase of each echo and cannot be expressed on the real signal.
inline ComplexSignal modulate_analytic(const std::vector<IQ>& symbols,
                                       const BasisBank& bank, int n_sweeps) {
  const std::size_t need =
      static_cast<std::size_t>(n_sweeps) * static_cast<std::size_t>(bank.m);
  if (symbols.size() < need)
    throw framing_error("modulate_analytic: " + std::to_string(symbols.size()) +
                        " symbols provided, " + std::to_string(need) + " needed");
  const std::size_t sweep_len = bank.bi.size();
  ComplexSignal out{
      std::vector<std::complex<double>>(sweep_len *
                                        static_cast<std::size_t>(n_sweeps)),
      bank.sample_rate, bank.t0};
  double delta = 0.0;
  for (int j = 0; j < n_sweeps; ++j) {
    const double c = std::cos(delta);
    const double s = std::sin(delta);
    auto* dst = out.samples.data() + sweep_len * static_cast<std::size_t>(j);
    for (int k = 0; k < bank.m; ++k) {
      const IQ sym = symbols[static_cast<std::size_t>(j) *
                                 static_cast<std::size_t>(bank.m) +
                             static_cast<std::size_t>(k)];
      const double ir = sym.i * c + sym.q * s;
      const double qr = sym.q * c - sym.i * s;
      const std::size_t off = static_cast<std::size_t>(k) * bank.sps;
      // (i - j*q) * e^{j*theta}: real part is i*bi + q*bq
      for (std::size_t n = 0; n < bank.sps; ++n)
        dst[off + n] = {ir * bank.bi[off + n] + qr * bank.bq[off + n],
                        ir * bank.bq[off + n] - qr * bank.bi[off + n]};
    }
    delta = std::fmod(delta + bank.phase_per_sweep, 2.0 * std::numbers::pi);
  }
  return out;
}

// Unmodulated analytic sweep amplitude*e^{j*theta(t)}, one or more periods.
inline ComplexSignal synthesize_carrier_analytic(const SweepParams& p,
                                                 double sample_rate,
                                                 int n_periods,
                                                 double amplitude = 1.0) {
  validate_sweep(p);
  if (n_periods < 1)
    throw config_error("synthesize_carrier_analytic: n_periods must be >= 1");
  const double t0 = -p.T_c / 2.0;
  const std::size_t n =
      static_cast<std::size_t>(std::llround(sample_rate * p.T_c * n_periods));
  ComplexSignal s{std::vector<std::complex<double>>(n), sample_rate, t0};
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t0 + static_cast<double>(i) / sample_rate;
    const double th = sweep_phase(t, p);
    s.samples[i] = {amplitude * std::cos(th), amplitude * std::sin(th)};
  }
  return s;
}

inline RealSignal modulate(const std::vector<int>& bits, const SweepParams& p,
                           const ModulationParams& mp, int n_sweeps,
                           double sample_rate,
                           bool allow_fractional_cycles = false) {
  if (n_sweeps < 1) throw config_error("modulate: n_sweeps must be >= 1");
  const std::size_t need_bits = static_cast<std::size_t>(n_sweeps) *
                                static_cast<std::size_t>(mp.m) *
                                static_cast<std::size_t>(bits_per_symbol(mp));
  if (bits.size() < need_bits)
    throw framing_error("modulate: need " + std::to_string(need_bits) +
                        " bits, got " + std::to_string(bits.size()));
  const std::vector<int> used(bits.begin(),
                              bits.begin() + static_cast<std::ptrdiff_t>(need_bits));
  const BasisBank bank = build_basis_bank(p, mp, sample_rate, allow_fractional_cycles);
  return modulate(mpsk_map(used, mp), bank, n_sweeps);
}

} // namespace bspsk
