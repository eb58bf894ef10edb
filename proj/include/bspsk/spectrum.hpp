#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "bspsk/errors.hpp"
#include "bspsk/signal.hpp"
#include "bspsk/sweep.hpp"

namespace bspsk {

// One delta line of a two-sided spectrum: amplitude is the coefficient of
// e^{j2*pi*f*t}, so a unit cosine contributes 0.5 at +f and 0.5 at -f.
struct SpectrumLine {
  double frequency_hz = 0.0;
  std::complex<double> amplitude;
};

// Analytic Fourier coefficient of the symmetric-period sawtooth:
// F_n = j*K*T_c*(-1)^n / (2*pi*n). The ramp is odd and zero-mean, so F_0 = 0
// and asking for it is a mistake rather than a value.
inline std::complex<double> sawtooth_fourier_coeff(int n, const SweepParams& p) {
  if (n == 0)
    throw domain_error("sawtooth_fourier_coeff: n = 0 (the zero-mean ramp has "
                       "no DC coefficient)");
  const double mag =
      p.K * p.T_c * ((n % 2 == 0) ? 1.0 : -1.0) / (2.0 * std::numbers::pi * n);
  return {0.0, mag};
}

// Partial Fourier synthesis over |n| <= n_terms. Converges to sawtooth(t)
// away from the period edges and to the jump midpoint (0) at the edges.
inline double sawtooth_synthesis(double t, const SweepParams& p, int n_terms) {
  if (n_terms < 1) throw config_error("sawtooth_synthesis: n_terms must be >= 1");
  // pair the +n/-n terms: each contributes -2*a_n*sin(2*pi*n*t/T_c) with
  // a_n = K*T_c*(-1)^n/(2*pi*n)
  double acc = 0.0;
  const double w0 = 2.0 * std::numbers::pi / p.T_c;
  for (int n = 1; n <= n_terms; ++n) {
    const double a =
        p.K * p.T_c * ((n % 2 == 0) ? 1.0 : -1.0) / (2.0 * std::numbers::pi * n);
    acc -= 2.0 * a * std::sin(w0 * n * t);
  }
  return acc;
}

// Modulation index of the narrowband expansion.
inline double nbfm_mu(const SweepParams& p) {
  return p.K_f * p.K * p.T_c * p.T_c /
         (2.0 * std::numbers::pi * std::numbers::pi);
}

// Keeping only the two significant ramp harmonics and linearizing the FM
// exponential is only honest while the dropped quadratic term stays small;
// mu = 0.25 keeps it under a few percent of the kept terms.
inline constexpr double nbfm_mu_limit = 0.25;

// Six-line spectrum of the narrowband-FM approximation of the sweeping
// carrier: composite carrier lines at +-f_c and quadrature sidebands of
// magnitude mu/4 at +-(f_c +- 1/T_c). With no modulation (mu = 0) the model
// collapses to the bare carrier pair. Higher ramp harmonics are intentionally
// absent from this model; validate_spectrum sees them only as residual error.
inline std::vector<SpectrumLine> nbfm_line_spectrum(const SweepParams& p,
                                                    bool allow_wideband = false) {
  validate_sweep(p);
  const double mu = nbfm_mu(p);
  if (mu > nbfm_mu_limit && !allow_wideband)
    throw domain_error("nbfm_line_spectrum: mu = " + std::to_string(mu) +
                       " exceeds the narrowband validity limit " +
                       std::to_string(nbfm_mu_limit) +
                       " (pass allow_wideband to override)");
  const double fc = carrier_hz(p);
  const std::complex<double> j(0.0, 1.0);
  if (mu == 0.0)
    return {{-fc, {0.5, 0.0}}, {fc, {0.5, 0.0}}};

  const double fl = fc - 1.0 / p.T_c;
  const double fu = fc + 1.0 / p.T_c;
  return {
      {-fu, +j * (mu / 4.0)},
      {-fc, 0.5 + j * (mu / 2.0)},
      {-fl, -j * (mu / 4.0)},
      {+fl, +j * (mu / 4.0)},
      {+fc, 0.5 - j * (mu / 2.0)},
      {+fu, -j * (mu / 4.0)},
  };
}

struct LineCheck {
  double frequency_hz = 0.0;
  double predicted_mag = 0.0;
  double measured_mag = 0.0;
  double rel_error = 0.0; // NaN where predicted_mag is 0
};

struct SpectrumCheck {
  double mu = 0.0;
  int n_periods = 0;
  bool used_flattop = false; // window fallback for non-bin-aligned configs
  std::vector<LineCheck> lines;
  double max_rel_error = 0.0; // over lines with predicted_mag > 0
};

namespace detail {

// Flat-top window (SR785 coefficients): worst-case amplitude error of a
// non-bin-centered tone is under 0.01%, which is what matters here; its wide
// main lobe is harmless at these line spacings.
inline std::vector<double> flattop_window(std::size_t n) {
  static constexpr double a[5] = {0.21557895, 0.41663158, 0.277263158,
                                  0.083578947, 0.006947368};
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x =
        2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1);
    w[i] = a[0] - a[1] * std::cos(x) + a[2] * std::cos(2 * x) -
           a[3] * std::cos(3 * x) + a[4] * std::cos(4 * x);
  }
  return w;
}

} // namespace detail

// Synthesize the sweeping carrier and compare measured line magnitudes
// against the narrowband model. When every line frequency lands on an
// integer number of cycles in the window (the rectangular window's zeros),
// the plain DFT is leakage-free and is used as-is; otherwise a flat-top
// window is applied so amplitude readings stay accurate off-bin.
inline SpectrumCheck validate_spectrum(const SweepParams& p, double sample_rate,
                                       int n_periods) {
  if (n_periods < 8)
    throw config_error("validate_spectrum: need n_periods >= 8");
  const double mu = nbfm_mu(p);
  if (mu > nbfm_mu_limit)
    throw domain_error("validate_spectrum: mu = " + std::to_string(mu) +
                       " is outside the narrowband model's validity");

  const std::vector<SpectrumLine> model = nbfm_line_spectrum(p);
  // evaluate all six candidate frequencies even when the model predicts
  // nothing there (the K_f = 0 case should show silent sidebands)
  const double fc = carrier_hz(p);
  const double step = 1.0 / p.T_c;
  const std::vector<double> freqs = {-(fc + step), -fc, -(fc - step),
                                     fc - step, fc, fc + step};

  RealSignal c = synthesize_carrier(p, sample_rate, n_periods);
  const double t_total = static_cast<double>(n_periods) * p.T_c;
  const double cycles = fc * t_total;
  const bool aligned =
      std::abs(cycles - std::round(cycles)) < 1e-9 * std::max(1.0, cycles) &&
      std::abs(sample_rate * t_total -
               std::round(sample_rate * t_total)) < 1e-6;

  SpectrumCheck report;
  report.mu = mu;
  report.n_periods = n_periods;
  report.used_flattop = !aligned;

  double scale = 1.0;
  if (!aligned) {
    const std::vector<double> w = detail::flattop_window(c.samples.size());
    double wsum = 0.0;
    for (std::size_t i = 0; i < c.samples.size(); ++i) {
      c.samples[i] *= w[i];
      wsum += w[i];
    }
    scale = static_cast<double>(c.samples.size()) / wsum;
  }

  report.max_rel_error = 0.0;
  for (double f : freqs) {
    const FrequencyGrid g{f, 1.0, 2}; // dft_magnitude wants >= 2 points
    const double meas = dft_magnitude(c, g)[0] * scale;
    double pred = 0.0;
    for (const auto& line : model)
      if (std::abs(line.frequency_hz - f) < 1e-9 * std::max(1.0, std::abs(f)))
        pred = std::abs(line.amplitude);
    LineCheck lc;
    lc.frequency_hz = f;
    lc.predicted_mag = pred;
    lc.measured_mag = meas;
    if (pred > 0.0) {
      lc.rel_error = std::abs(meas - pred) / pred;
      report.max_rel_error = std::max(report.max_rel_error, lc.rel_error);
    } else {
      lc.rel_error = std::numeric_limits<double>::quiet_NaN();
    }
    report.lines.push_back(lc);
  }
  return report;
}

} // namespace bspsk
