#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "bspsk/channel.hpp"
#include "bspsk/errors.hpp"
#include "bspsk/signal.hpp"
#include "bspsk/sweep.hpp"

namespace bspsk {

// Zero-phase envelope low-pass. The kernel is a Hamming-windowed sinc run
// forward and backward (two passes of a symmetric FIR are zero-phase by
// construction); guard_samples is the transient half-width of the pair,
// i.e. two single-pass group delays.
struct EnvelopeFilter {
  std::vector<double> kernel;
  double f_env = 0.0;  // passband edge, Hz
  double f_stop = 0.0; // stopband edge, Hz
  double sample_rate = 0.0;

  std::size_t guard_samples() const { return kernel.size() - 1; }
  double guard_seconds() const {
    return static_cast<double>(guard_samples()) / sample_rate;
  }
};

// Cutoff rule: the envelope must pass the channel ripple (the fastest
// variation of |H(f(t))| has rate B_Hz*tau_max/T_c) and reject the carrier
// (lowest instantaneous frequency f_min). The geometric mean splits the two
// on a log axis; the 32/T_c floor keeps the kernel short when the ripple is
// slow or absent. Both separations must hold by at least 10x or the
// parameter set cannot support envelope estimation at all.
inline EnvelopeFilter design_envelope_filter(const SweepParams& p,
                                             double sample_rate,
                                             double tau_max = 0.0) {
  validate_sweep(p);
  const double f_min = sweep_f_min_hz(p);
  const double f_ripple = sweep_bandwidth_hz(p) * tau_max / p.T_c;
  const double f_env = std::max(std::sqrt(f_min * f_ripple), 32.0 / p.T_c);
  if (f_ripple > 0.0 && f_env < 10.0 * f_ripple)
    throw config_error("envelope filter: channel ripple rate " +
                       std::to_string(f_ripple) + " Hz is within 10x of the "
                       "cutoff " + std::to_string(f_env) +
                       " Hz; delay spread too large for this sweep");
  if (f_env * 10.0 > f_min)
    throw config_error("envelope filter: cutoff " + std::to_string(f_env) +
                       " Hz is within 10x of the lowest carrier frequency " +
                       std::to_string(f_min) + " Hz; sweep too slow or band "
                       "too low for envelope detection");

  EnvelopeFilter lpf;
  lpf.f_env = f_env;
  lpf.f_stop = 0.15 * f_min;
  lpf.sample_rate = sample_rate;
  const double width = lpf.f_stop - f_env;
  std::size_t len =
      static_cast<std::size_t>(std::ceil(3.3 * sample_rate / width));
  if (len % 2 == 0) ++len;
  const double fc = (f_env + lpf.f_stop) / 2.0 / sample_rate; // cycles/sample
  const std::size_t c = (len - 1) / 2;
  lpf.kernel.resize(len);
  double sum = 0.0;
  for (std::size_t i = 0; i < len; ++i) {
    const double x = static_cast<double>(i) - static_cast<double>(c);
    const double sinc = (x == 0.0)
                            ? 2.0 * fc
                            : std::sin(2.0 * std::numbers::pi * fc * x) /
                                  (std::numbers::pi * x);
    const double w =
        0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) /
                               static_cast<double>(len - 1));
    lpf.kernel[i] = sinc * w;
    sum += lpf.kernel[i];
  }
  for (double& v : lpf.kernel) v /= sum;
  return lpf;
}

namespace detail {

// 'same' convolution with a centered odd-length kernel (zero extension).
inline std::vector<double> convolve_same(const std::vector<double>& x,
                                         const std::vector<double>& h) {
  const std::size_t n = x.size();
  const std::size_t len = h.size();
  const std::size_t c = (len - 1) / 2;
  std::vector<double> padded(n + len - 1, 0.0);
  std::copy(x.begin(), x.end(), padded.begin() + static_cast<std::ptrdiff_t>(c));
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    const double* src = padded.data() + i;
    for (std::size_t k = 0; k < len; ++k) acc += h[k] * src[k];
    out[i] = acc;
  }
  return out;
}

} // namespace detail

// Full-wave rectifier followed by the zero-phase low-pass, scaled by pi/2 to
// undo the rectifier's mean loss (mean of |A cos| is 2A/pi). The output keeps
// the input's rate and time axis; samples within guard_samples of either end
// are filter transients and must be masked by the caller.
inline RealSignal envelope_detect(const RealSignal& s, const SweepParams& p,
                                  double tau_max = 0.0) {
  const EnvelopeFilter lpf = design_envelope_filter(p, s.sample_rate, tau_max);
  if (s.samples.size() < lpf.kernel.size())
    throw insufficient_data_error(
        "envelope_detect: " + std::to_string(s.samples.size()) +
        " samples is shorter than the " + std::to_string(lpf.kernel.size()) +
        "-tap envelope filter");
  std::vector<double> env(s.samples.size());
  for (std::size_t i = 0; i < env.size(); ++i) env[i] = std::abs(s.samples[i]);
  env = detail::convolve_same(env, lpf.kernel);
  env = detail::convolve_same(env, lpf.kernel);
  const double gain = std::numbers::pi / 2.0;
  for (double& v : env) v *= gain;
  return {std::move(env), s.sample_rate, s.t0};
}

// Estimated |H| across the swept band. The grid spans exactly the band:
// f_start = f_c - B_Hz/2 with step B_Hz/n_points, so the implied delay grid
// of estimate_taps has spacing exactly 1/B_Hz.
struct TransferEstimate {
  FrequencyGrid grid;
  std::vector<double> magnitude;
  std::vector<std::uint8_t> valid;
  double norm_factor = 1.0; // scale divided out of the raw envelope

  double valid_fraction() const {
    std::size_t n = 0;
    for (auto v : valid) n += v;
    return static_cast<double>(n) / static_cast<double>(valid.size());
  }
};

using TimeInterval = std::pair<double, double>;

// Map one sweep's envelope onto the frequency axis: the sample at time t was
// taken while the carrier sat at f(t) = (omega_c + K_f*K*t)/(2*pi), so |H| at
// a grid frequency is the envelope linearly interpolated at the inverse-map
// time, divided by the known transmit envelope amplitude. Grid points whose
// time falls in a masked interval (filter transients at sweep edges, symbol
// switching glitches) are flagged invalid.
inline TransferEstimate envelope_to_transfer(
    const RealSignal& env, const SweepParams& p, double tx_amplitude,
    const std::vector<TimeInterval>& transient_mask, std::size_t n_points = 512) {
  validate_sweep(p);
  if (!(tx_amplitude > 0.0))
    throw config_error("envelope_to_transfer: tx_amplitude must be > 0");
  if (n_points < 16 || n_points % 2 != 0)
    throw config_error("envelope_to_transfer: n_points must be even and >= 16");
  const double slope = p.K_f * p.K; // rad/s per second of sweep
  if (!(slope > 0.0))
    throw config_error("envelope_to_transfer: estimation requires a nonzero "
                       "swept bandwidth");
  const double fs = env.sample_rate;
  const std::size_t n_sweep =
      static_cast<std::size_t>(std::llround(fs * p.T_c));
  if (env.samples.size() != n_sweep)
    throw framing_error("envelope_to_transfer: expected exactly one sweep (" +
                        std::to_string(n_sweep) + " samples), got " +
                        std::to_string(env.samples.size()));
  if (std::abs(env.t0 + p.T_c / 2.0) > 0.5 / fs)
    throw framing_error("envelope_to_transfer: envelope must start at the "
                        "sweep edge -T_c/2");

  TransferEstimate h;
  h.grid.f_start = carrier_hz(p) - sweep_bandwidth_hz(p) / 2.0;
  h.grid.f_step = sweep_bandwidth_hz(p) / static_cast<double>(n_points);
  h.grid.n_points = n_points;
  h.norm_factor = 1.0 / tx_amplitude;
  h.magnitude.resize(n_points);
  h.valid.assign(n_points, 1);

  for (std::size_t i = 0; i < n_points; ++i) {
    const double f = h.grid.frequency(i);
    const double t = (2.0 * std::numbers::pi * f - p.omega_c) / slope;
    const double x = (t - env.t0) * fs;
    const std::size_t lo = static_cast<std::size_t>(
        std::clamp(std::floor(x), 0.0, static_cast<double>(n_sweep - 1)));
    const std::size_t hi = std::min(lo + 1, n_sweep - 1);
    const double frac = std::clamp(x - static_cast<double>(lo), 0.0, 1.0);
    const double e =
        env.samples[lo] * (1.0 - frac) + env.samples[hi] * frac;
    h.magnitude[i] = std::max(0.0, e / tx_amplitude);
    for (const auto& [a, b] : transient_mask)
      if (t >= a && t <= b) {
        h.valid[i] = 0;
        break;
      }
  }
  if (h.valid_fraction() < 0.5)
    throw insufficient_data_error(
        "envelope_to_transfer: only " +
        std::to_string(100.0 * h.valid_fraction()) +
        "% of grid points are outside transient masks (need >= 50%)");
  return h;
}

// Magnitude with invalid points replaced by linear interpolation between
// their valid neighbors (edges extend the nearest valid value).
inline std::vector<double> filled_magnitude(const TransferEstimate& h) {
  const std::size_t n = h.magnitude.size();
  std::vector<double> out = h.magnitude;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i)
    if (h.valid[i]) idx.push_back(i);
  if (idx.size() < n / 2)
    throw insufficient_data_error("filled_magnitude: fewer than 50% valid points");
  for (std::size_t i = 0; i < idx.front(); ++i) out[i] = out[idx.front()];
  for (std::size_t i = idx.back() + 1; i < n; ++i) out[i] = out[idx.back()];
  for (std::size_t k = 0; k + 1 < idx.size(); ++k) {
    const std::size_t a = idx[k], b = idx[k + 1];
    for (std::size_t i = a + 1; i < b; ++i) {
      const double frac = static_cast<double>(i - a) / static_cast<double>(b - a);
      out[i] = out[a] * (1.0 - frac) + out[b] * frac;
    }
  }
  return out;
}

// Tap magnitudes on the delay grid implied by the estimate's span.
struct TapEstimate {
  std::vector<double> delays_s; // uniform, spacing 1/(span of the grid)
  std::vector<double> gains;    // nonnegative magnitudes
};

// Inverse DFT of the magnitude samples across the band. The input is real,
// so bins j and N-j carry the same echo split in half; they are recombined
// one-sided (gains[j] = |c_j| + |c_{N-j}|) so a two-ray channel reads out as
// one tap per ray. Phase was discarded by the envelope, so these are the
// taps of |H|, not of h itself; delay locations survive, exact gain ratios
// do not.
inline TapEstimate estimate_taps(const TransferEstimate& h) {
  const std::size_t n = h.magnitude.size();
  const std::vector<double> mag = filled_magnitude(h);
  TapEstimate taps;
  const double span = h.grid.f_step * static_cast<double>(n);
  const std::size_t half = n / 2;
  taps.delays_s.resize(half + 1);
  taps.gains.resize(half + 1);
  for (std::size_t j = 0; j <= half; ++j) {
    const double w = -2.0 * std::numbers::pi * static_cast<double>(j) /
                     static_cast<double>(n);
    const std::complex<double> step(std::cos(w), std::sin(w));
    std::complex<double> rot(1.0, 0.0);
    std::complex<double> acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      acc += mag[k] * rot;
      rot *= step;
    }
    const double cj = std::abs(acc) / static_cast<double>(n);
    taps.delays_s[j] = static_cast<double>(j) / span;
    taps.gains[j] = (j == 0 || j == half) ? cj : 2.0 * cj;
  }
  return taps;
}

// Ground-truth |H| on the estimator's grid, for genie equalization and for
// scoring estimates.
inline TransferEstimate genie_transfer(const ChannelRealization& ch,
                                       const SweepParams& p,
                                       std::size_t n_points = 512) {
  TransferEstimate h;
  h.grid.f_start = carrier_hz(p) - sweep_bandwidth_hz(p) / 2.0;
  h.grid.f_step = sweep_bandwidth_hz(p) / static_cast<double>(n_points);
  h.grid.n_points = n_points;
  const auto hc = transfer_function(ch, h.grid);
  h.magnitude.resize(n_points);
  for (std::size_t i = 0; i < n_points; ++i) h.magnitude[i] = std::abs(hc[i]);
  h.valid.assign(n_points, 1);
  h.norm_factor = 1.0;
  return h;
}

// One-call estimator: rectify/filter the received sweep, mask the filter
// transients at the sweep edges plus any symbol boundaries (modulated mode),
// and map to the frequency grid.
inline TransferEstimate estimate_transfer(
    const RealSignal& rx_sweep, const SweepParams& p, double tx_amplitude,
    double tau_max, const std::vector<double>& symbol_boundaries = {},
    std::size_t n_points = 512) {
  const EnvelopeFilter lpf = design_envelope_filter(p, rx_sweep.sample_rate, tau_max);
  // pad masks by half a sample so grid points that inverse-map exactly onto
  // a mask endpoint cannot escape through rounding
  const double g = lpf.guard_seconds() + 0.5 / rx_sweep.sample_rate;
  const RealSignal env = envelope_detect(rx_sweep, p, tau_max);
  std::vector<TimeInterval> masks;
  masks.emplace_back(env.t0 - g, env.t0 + g);
  masks.emplace_back(env.t0 + p.T_c - g, env.t0 + p.T_c + g);
  for (double b : symbol_boundaries) masks.emplace_back(b - g, b + g);
  return envelope_to_transfer(env, p, tx_amplitude, masks, n_points);
}

// Carrier frequency at the midpoint of symbol slot k (first sweep), Hz.
inline double slot_center_frequency_hz(const SweepParams& p,
                                       const ModulationParams& mp, int k) {
  const double t = -p.T_c / 2.0 + (static_cast<double>(k) + 0.5) * mp.T_s;
  return instantaneous_frequency_hz(t, p);
}

// Correlator bank: project each symbol slot onto its own basis pair.
inline std::vector<IQ> correlate_demod(const RealSignal& s, const BasisBank& bank) {
  if (s.sample_rate != bank.sample_rate)
    throw dimension_error("correlate_demod: sample rate mismatch");
  if (std::abs(s.t0 - bank.t0) > 0.5 / s.sample_rate)
    throw framing_error("correlate_demod: waveform must start at the sweep "
                        "edge -T_c/2");
  if (s.samples.size() % bank.sps != 0)
    throw framing_error("correlate_demod: length " +
                        std::to_string(s.samples.size()) +
                        " is not a whole number of symbol slots");
  const std::size_t n_slots = s.samples.size() / bank.sps;
  std::vector<IQ> out(n_slots);
  double delta = 0.0;
  double c = 1.0, sn = 0.0;
  for (std::size_t g = 0; g < n_slots; ++g) {
    const std::size_t k = g % static_cast<std::size_t>(bank.m);
    if (g > 0 && k == 0) {
      delta = std::fmod(delta + bank.phase_per_sweep, 2.0 * std::numbers::pi);
      c = std::cos(delta);
      sn = std::sin(delta);
    }
    const double* x = s.samples.data() + g * bank.sps;
    const double* bi = bank.bi.data() + k * bank.sps;
    const double* bq = bank.bq.data() + k * bank.sps;
    double pi_acc = 0.0, pq_acc = 0.0;
    for (std::size_t n = 0; n < bank.sps; ++n) {
      pi_acc += x[n] * bi[n];
      pq_acc += x[n] * bq[n];
    }
    pi_acc /= s.sample_rate;
    pq_acc /= s.sample_rate;
    // undo the per-sweep rotation applied at the modulator
    out[g] = {c * pi_acc - sn * pq_acc, sn * pi_acc + c * pq_acc};
  }
  return out;
}

inline std::vector<IQ> correlate_demod(const RealSignal& s, const SweepParams& p,
                                       const ModulationParams& mp,
                                       bool allow_fractional_cycles = false) {
  return correlate_demod(
      s, build_basis_bank(p, mp, s.sample_rate, allow_fractional_cycles));
}

// Per-symbol zero-forcing: divide each projection pair by the estimated
// channel magnitude at that slot's center frequency. Magnitudes below
// 5% of the estimate's peak are clamped there so spectral nulls cannot
// blow up the noise without bound.
inline std::vector<IQ> zf_equalize(const std::vector<IQ>& proj,
                                   const TransferEstimate& h,
                                   const SweepParams& p,
                                   const ModulationParams& mp) {
  const std::vector<double> mag = filled_magnitude(h);
  const double peak = *std::max_element(mag.begin(), mag.end());
  if (!(peak > 0.0))
    throw domain_error("zf_equalize: transfer estimate is identically zero");
  const double floor = 0.05 * peak;
  std::vector<IQ> out(proj.size());
  for (std::size_t g = 0; g < proj.size(); ++g) {
    const int k = static_cast<int>(g % static_cast<std::size_t>(mp.m));
    const double f = slot_center_frequency_hz(p, mp, k);
    const double x = std::clamp((f - h.grid.f_start) / h.grid.f_step, 0.0,
                                static_cast<double>(mag.size() - 1));
    const std::size_t lo = static_cast<std::size_t>(x);
    const std::size_t hi = std::min(lo + 1, mag.size() - 1);
    const double frac = x - static_cast<double>(lo);
    const double gmag =
        std::max(mag[lo] * (1.0 - frac) + mag[hi] * frac, floor);
    out[g] = {proj[g].i / gmag, proj[g].q / gmag};
  }
  return out;
}

// Nearest-constellation decision and Gray decode. A projection exactly at
// the origin resolves to point 0 (atan2(0,0) = 0), the documented tie-break.
inline std::vector<int> slicer(const std::vector<IQ>& proj,
                               const ModulationParams& mp) {
  const std::vector<int> labels = mpsk_labels(mp.M);
  const int bps = bits_per_symbol(mp);
  std::vector<int> bits;
  bits.reserve(proj.size() * static_cast<std::size_t>(bps));
  for (const IQ& s : proj) {
    const double ang = std::atan2(s.q, s.i);
    long k = std::lround(ang * mp.M / (2.0 * std::numbers::pi));
    k = ((k % mp.M) + mp.M) % mp.M;
    const int label = labels[static_cast<std::size_t>(k)];
    for (int b = bps - 1; b >= 0; --b) bits.push_back((label >> b) & 1);
  }
  return bits;
}

} // namespace bspsk
