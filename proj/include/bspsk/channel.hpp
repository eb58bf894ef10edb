#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "bspsk/errors.hpp"
#include "bspsk/rng.hpp"
#include "bspsk/signal.hpp"

namespace bspsk {

// Power delay profile entry. Powers are relative to the first tap.
struct Tap {
  double delay_s = 0.0;
  double power_db = 0.0;
};

struct TapProfile {
  std::vector<Tap> taps;

  double max_delay() const {
    return taps.empty() ? 0.0 : taps.back().delay_s;
  }
};

inline void validate_profile(const TapProfile& profile) {
  if (profile.taps.empty())
    throw config_error("channel: at least one tap required");
  if (profile.taps.front().delay_s != 0.0)
    throw config_error("channel: first tap delay must be 0");
  for (std::size_t k = 0; k < profile.taps.size(); ++k) {
    if (profile.taps[k].delay_s < 0.0)
      throw config_error("channel: tap delays must be nonnegative");
    if (k > 0 && !(profile.taps[k].delay_s > profile.taps[k - 1].delay_s))
      throw config_error("channel: tap delays must be strictly increasing");
  }
}

struct TapGain {
  double delay_s = 0.0;
  std::complex<double> gain;
};

// One draw of the channel, held fixed for a whole coherence interval.
struct ChannelRealization {
  std::vector<TapGain> taps;
  std::uint64_t seed_record = 0;

  double max_delay() const {
    return taps.empty() ? 0.0 : taps.back().delay_s;
  }
};

enum class ChannelMode { fixed, rayleigh };

// fixed: deterministic real gains sqrt(10^(dB/10)), for reproducible tests.
// rayleigh: circularly symmetric complex Gaussian per tap with the configured
// mean power, drawn from a stream keyed by (seed, tap index).
inline ChannelRealization draw_realization(const TapProfile& profile,
                                           std::uint64_t seed,
                                           ChannelMode mode) {
  validate_profile(profile);
  ChannelRealization ch;
  ch.seed_record = seed;
  ch.taps.reserve(profile.taps.size());
  for (std::size_t k = 0; k < profile.taps.size(); ++k) {
    const double power = std::pow(10.0, profile.taps[k].power_db / 10.0);
    std::complex<double> g;
    if (mode == ChannelMode::fixed) {
      g = std::sqrt(power);
    } else {
      SplitMix64 rng(derive_seed(seed, {0x7A50u, k}));
      g = std::sqrt(power) * rng.complex_gaussian();
    }
    ch.taps.push_back({profile.taps[k].delay_s, g});
  }
  return ch;
}

// Collapse complex gains onto the real axis as sign(Re g)*|g|. This is the
// real-passband path: it preserves each tap's magnitude (what the envelope
// estimator can see) without inventing a carrier-phase convention the
// real-carrier derivation never defines.
inline ChannelRealization to_real_gains(const ChannelRealization& ch) {
  ChannelRealization out = ch;
  for (auto& tap : out.taps) {
    const double mag = std::abs(tap.gain);
    tap.gain = std::copysign(mag, tap.gain.real() >= 0.0 ? 1.0 : -1.0);
  }
  return out;
}

// Ground-truth transfer function H(f) = sum_k g_k e^{-j*2*pi*f*d_k}.
inline std::vector<std::complex<double>> transfer_function(
    const ChannelRealization& ch, const FrequencyGrid& grid) {
  validate_grid(grid);
  std::vector<std::complex<double>> h(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i) {
    const double f = grid.frequency(i);
    std::complex<double> acc = 0.0;
    for (const auto& tap : ch.taps) {
      const double ph = -2.0 * std::numbers::pi * f * tap.delay_s;
      acc += tap.gain * std::complex<double>(std::cos(ph), std::sin(ph));
    }
    h[i] = acc;
  }
  return h;
}

namespace detail {

inline std::vector<std::size_t> delay_samples(const ChannelRealization& ch,
                                              double sample_rate) {
  std::vector<std::size_t> d;
  d.reserve(ch.taps.size());
  for (const auto& tap : ch.taps) {
    const double exact = tap.delay_s * sample_rate;
    const double rounded = std::round(exact);
    if (std::abs(exact - rounded) > 1e-6 * std::max(1.0, std::abs(exact)))
      throw config_error(
          "channel: tap delay " + std::to_string(tap.delay_s) +
          " s is not an integer number of samples at " +
          std::to_string(sample_rate) + " Hz; use a sample rate that is a "
          "multiple of " + std::to_string(1.0 / tap.delay_s) + " Hz");
    d.push_back(static_cast<std::size_t>(rounded));
  }
  return d;
}

} // namespace detail

// Tapped-delay-line convolution for real passband waveforms. Gains must be
// real here (fixed mode, or rayleigh collapsed via to_real_gains); genuinely
// complex gains only make sense on the analytic-signal overload below.
// Output length = input length + max delay; the head of the output is a
// startup transient where delayed copies are still zero.
inline RealSignal apply_channel(const RealSignal& s, const ChannelRealization& ch) {
  if (s.samples.empty()) throw dimension_error("apply_channel: empty signal");
  const std::vector<std::size_t> d = detail::delay_samples(ch, s.sample_rate);
  for (const auto& tap : ch.taps)
    if (std::abs(tap.gain.imag()) > 1e-12 * std::abs(tap.gain))
      throw config_error("apply_channel: complex tap gains on a real waveform; "
                         "use the analytic-signal overload or to_real_gains()");
  RealSignal out{std::vector<double>(s.samples.size() + d.back(), 0.0),
                 s.sample_rate, s.t0};
  for (std::size_t k = 0; k < ch.taps.size(); ++k) {
    const double g = ch.taps[k].gain.real();
    const std::size_t off = d[k];
    for (std::size_t n = 0; n < s.samples.size(); ++n)
      out.samples[n + off] += g * s.samples[n];
  }
  return out;
}

// Analytic-signal path: complex gains rotate the carrier phase of each echo.
inline ComplexSignal apply_channel(const ComplexSignal& s,
                                   const ChannelRealization& ch) {
  if (s.samples.empty()) throw dimension_error("apply_channel: empty signal");
  const std::vector<std::size_t> d = detail::delay_samples(ch, s.sample_rate);
  ComplexSignal out{std::vector<std::complex<double>>(s.samples.size() + d.back(),
                                                      0.0),
                    s.sample_rate, s.t0};
  for (std::size_t k = 0; k < ch.taps.size(); ++k) {
    const std::complex<double> g = ch.taps[k].gain;
    const std::size_t off = d[k];
    for (std::size_t n = 0; n < s.samples.size(); ++n)
      out.samples[n + off] += g * s.samples[n];
  }
  return out;
}

// Additive white Gaussian noise at the given sample-domain SNR.
// snr_db = +infinity is the documented no-noise sentinel.
inline RealSignal add_awgn(const RealSignal& s, double snr_db,
                           std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0.0) return s;
  const double p = mean_power(s);
  if (p <= 0.0)
    throw domain_error("add_awgn: zero-power input signal has no defined SNR");
  const double sigma = std::sqrt(p / std::pow(10.0, snr_db / 10.0));
  SplitMix64 rng(seed);
  RealSignal out = s;
  for (double& v : out.samples) v += sigma * rng.gaussian();
  return out;
}

} // namespace bspsk
