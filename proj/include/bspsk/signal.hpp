#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <string>
#include <vector>

#include "bspsk/errors.hpp"

namespace bspsk {

// Uniformly sampled waveform. t0 is the time of samples.front().
template <typename T>
struct Signal {
  std::vector<T> samples;
  double sample_rate = 0.0; // Hz
  double t0 = 0.0;          // seconds

  std::size_t size() const { return samples.size(); }
  double duration() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
  double time_at(std::size_t n) const {
    return t0 + static_cast<double>(n) / sample_rate;
  }
};

using RealSignal = Signal<double>;
using ComplexSignal = Signal<std::complex<double>>;

// Uniform frequency grid: f_start, f_start + f_step, ...
struct FrequencyGrid {
  double f_start = 0.0; // Hz
  double f_step = 0.0;  // Hz
  std::size_t n_points = 0;

  double frequency(std::size_t i) const {
    return f_start + f_step * static_cast<double>(i);
  }
  double f_end() const { return frequency(n_points - 1); }
};

inline void validate_grid(const FrequencyGrid& g) {
  if (!(g.f_step > 0.0)) throw config_error("frequency grid: f_step must be > 0");
  if (g.n_points < 2) throw config_error("frequency grid: need at least 2 points");
}

namespace detail {

template <typename T>
void require_compatible(const Signal<T>& a, const Signal<T>& b) {
  if (a.samples.empty() || b.samples.empty())
    throw dimension_error("inner_product: empty signal");
  if (a.samples.size() != b.samples.size())
    throw dimension_error("inner_product: length mismatch (" +
                          std::to_string(a.samples.size()) + " vs " +
                          std::to_string(b.samples.size()) + ")");
  if (a.sample_rate != b.sample_rate)
    throw dimension_error("inner_product: sample rate mismatch");
  if (std::abs(a.t0 - b.t0) > 0.5 / a.sample_rate)
    throw dimension_error("inner_product: start time mismatch");
}

} // namespace detail

// Rectangle-rule integral of a*b over the common support. Waveforms here are
// heavily oversampled, so no higher-order quadrature is warranted, and the
// rectangle rule keeps the product exactly bilinear.
inline double inner_product(const RealSignal& a, const RealSignal& b) {
  detail::require_compatible(a, b);
  double acc = 0.0;
  for (std::size_t n = 0; n < a.samples.size(); ++n)
    acc += a.samples[n] * b.samples[n];
  return acc / a.sample_rate;
}

// Conjugate inner product for complex signals: integral of a * conj(b).
inline std::complex<double> inner_product(const ComplexSignal& a,
                                          const ComplexSignal& b) {
  detail::require_compatible(a, b);
  std::complex<double> acc = 0.0;
  for (std::size_t n = 0; n < a.samples.size(); ++n)
    acc += a.samples[n] * std::conj(b.samples[n]);
  return acc / a.sample_rate;
}

inline double energy(const RealSignal& s) { return inner_product(s, s); }

inline double energy(const ComplexSignal& s) {
  return inner_product(s, s).real();
}

inline double mean_power(const RealSignal& s) {
  if (s.samples.empty()) throw dimension_error("mean_power: empty signal");
  double acc = 0.0;
  for (double v : s.samples) acc += v * v;
  return acc / static_cast<double>(s.samples.size());
}

// First n samples as a signal (keeps rate and t0).
inline RealSignal head(const RealSignal& s, std::size_t n) {
  if (n > s.samples.size())
    throw dimension_error("head: requested more samples than available");
  return {std::vector<double>(s.samples.begin(),
                              s.samples.begin() + static_cast<std::ptrdiff_t>(n)),
          s.sample_rate, s.t0};
}

// Magnitude of the DTFT of s on an arbitrary grid, normalized so a unit
// cosine at a window-aligned frequency reads 0.5 (its two-sided line weight).
// Evaluated pointwise with a rotating phasor, so the grid does not have to be
// FFT-bin aligned.
inline std::vector<double> dft_magnitude(const RealSignal& s,
                                         const FrequencyGrid& grid) {
  validate_grid(grid);
  if (s.samples.empty()) throw dimension_error("dft_magnitude: empty signal");
  const double nyquist = s.sample_rate / 2.0;
  std::vector<double> out(grid.n_points);
  for (std::size_t i = 0; i < grid.n_points; ++i) {
    const double f = grid.frequency(i);
    if (std::abs(f) >= nyquist)
      throw range_error("dft_magnitude: grid frequency " + std::to_string(f) +
                        " Hz is at or above Nyquist (" + std::to_string(nyquist) +
                        " Hz)");
    const double w = -2.0 * std::numbers::pi * f / s.sample_rate;
    const std::complex<double> step(std::cos(w), std::sin(w));
    std::complex<double> rot(1.0, 0.0);
    std::complex<double> acc = 0.0;
    for (double v : s.samples) {
      acc += v * rot;
      rot *= step;
    }
    out[i] = std::abs(acc) / static_cast<double>(s.samples.size());
  }
  return out;
}

} // namespace bspsk
