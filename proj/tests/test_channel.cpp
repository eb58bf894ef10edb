#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "bspsk/channel.hpp"
#include "bspsk/rng.hpp"
#include "bspsk/signal.hpp"

using namespace bspsk;
using std::numbers::pi;

namespace {

TapProfile two_tap() { return {{{0.0, 0.0}, {1e-6, -4.0}}}; }

RealSignal noise_signal(std::uint64_t seed, std::size_t n, double fs) {
  SplitMix64 rng(seed);
  RealSignal s{{}, fs, 0.0};
  s.samples.resize(n);
  for (auto& v : s.samples) v = rng.gaussian();
  return s;
}

} // namespace

TEST_CASE("profile validation") {
  CHECK_NOTHROW(validate_profile(two_tap()));
  CHECK_THROWS_AS(validate_profile({{}}), config_error);
  CHECK_THROWS_AS(validate_profile({{{1e-6, 0.0}}}), config_error);
  CHECK_THROWS_AS(validate_profile({{{0.0, 0.0}, {1e-6, -4.0}, {1e-6, -8.0}}}),
                  config_error);
  CHECK_THROWS_AS(validate_profile({{{0.0, 0.0}, {-1e-6, -4.0}}}), config_error);
}

TEST_CASE("fixed realization uses deterministic amplitude gains") {
  const auto ch = draw_realization(two_tap(), 1, ChannelMode::fixed);
  REQUIRE(ch.taps.size() == 2);
  CHECK(ch.taps[0].gain.real() == Catch::Approx(1.0));
  CHECK(ch.taps[1].gain.real() == Catch::Approx(0.6310).margin(1e-4));
  CHECK(ch.taps[0].gain.imag() == 0.0);
  CHECK(ch.taps[1].delay_s == 1e-6);
  CHECK(ch.max_delay() == 1e-6);
}

TEST_CASE("same seed reproduces the same realization") {
  const auto a = draw_realization(two_tap(), 77, ChannelMode::rayleigh);
  const auto b = draw_realization(two_tap(), 77, ChannelMode::rayleigh);
  const auto c = draw_realization(two_tap(), 78, ChannelMode::rayleigh);
  REQUIRE(a.taps.size() == b.taps.size());
  for (std::size_t k = 0; k < a.taps.size(); ++k) {
    CHECK(a.taps[k].gain == b.taps[k].gain);
    CHECK(a.taps[k].gain != c.taps[k].gain);
  }
  CHECK(a.seed_record == 77);
}

TEST_CASE("rayleigh gains carry the configured mean power") {
  const auto profile = two_tap();
  const int n = 100000;
  double p0 = 0.0, p1 = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto ch =
        draw_realization(profile, static_cast<std::uint64_t>(i), ChannelMode::rayleigh);
    p0 += std::norm(ch.taps[0].gain);
    p1 += std::norm(ch.taps[1].gain);
  }
  CHECK(p0 / n == Catch::Approx(1.0).epsilon(0.02));
  CHECK(p1 / n == Catch::Approx(std::pow(10.0, -0.4)).epsilon(0.02));
}

TEST_CASE("rayleigh phases are uniform") {
  const int n = 10000;
  std::vector<double> u(n);
  for (int i = 0; i < n; ++i) {
    const auto ch = draw_realization(two_tap(), static_cast<std::uint64_t>(i),
                                     ChannelMode::rayleigh);
    u[static_cast<std::size_t>(i)] =
        (std::arg(ch.taps[0].gain) + pi) / (2.0 * pi);
  }
  std::sort(u.begin(), u.end());
  double d = 0.0;
  for (int i = 0; i < n; ++i) {
    const double f = u[static_cast<std::size_t>(i)];
    d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    d = std::max(d, std::abs(f - static_cast<double>(i + 1) / n));
  }
  // Kolmogorov-Smirnov at 1% significance
  CHECK(d * std::sqrt(static_cast<double>(n)) < 1.628);
}

TEST_CASE("to_real_gains keeps magnitudes and drops phase") {
  const auto ch = draw_realization(two_tap(), 5, ChannelMode::rayleigh);
  const auto real_ch = to_real_gains(ch);
  for (std::size_t k = 0; k < ch.taps.size(); ++k) {
    CHECK(real_ch.taps[k].gain.imag() == 0.0);
    CHECK(std::abs(real_ch.taps[k].gain.real()) ==
          Catch::Approx(std::abs(ch.taps[k].gain)));
  }
}

TEST_CASE("transfer function of the identity channel is flat") {
  const auto ch = draw_realization({{{0.0, 0.0}}}, 0, ChannelMode::fixed);
  const auto h = transfer_function(ch, {0.0, 1e5, 64});
  for (const auto& v : h) {
    CHECK(v.real() == Catch::Approx(1.0));
    CHECK(v.imag() == Catch::Approx(0.0).margin(1e-15));
  }
}

TEST_CASE("two-tap transfer function peaks and nulls") {
  const auto ch = draw_realization(two_tap(), 0, ChannelMode::fixed);
  const auto h = transfer_function(ch, {0.0, 5e5, 3});
  CHECK(std::abs(h[0]) == Catch::Approx(1.6310).margin(1e-4));
  CHECK(std::abs(h[1]) == Catch::Approx(0.3690).margin(1e-4));
  // |H| is periodic with 1/tau = 1 MHz
  const auto a = transfer_function(ch, {2e6, 12500.0, 80});
  const auto b = transfer_function(ch, {3e6, 12500.0, 80});
  for (std::size_t i = 0; i < a.size(); ++i)
    CHECK(std::abs(std::abs(a[i]) - std::abs(b[i])) < 1e-9);
}

TEST_CASE("apply_channel identity") {
  const auto ch = draw_realization({{{0.0, 0.0}}}, 0, ChannelMode::fixed);
  const auto x = noise_signal(3, 100, 8e6);
  const auto y = apply_channel(x, ch);
  REQUIRE(y.size() == x.size());
  for (std::size_t n = 0; n < x.size(); ++n)
    CHECK(y.samples[n] == x.samples[n]);
}

TEST_CASE("steady-state tone gain matches the transfer function") {
  const auto ch = draw_realization(two_tap(), 0, ChannelMode::fixed);
  const double fs = 8e6;
  const double f = 2.5e5; // 32 samples per cycle
  RealSignal x{{}, fs, 0.0};
  x.samples.resize(4000);
  for (std::size_t n = 0; n < x.size(); ++n)
    x.samples[n] = std::cos(2.0 * pi * f * static_cast<double>(n) / fs);
  const auto y = apply_channel(x, ch);

  // projection amplitude over integer cycles, transient discarded
  const std::size_t start = 8, len = 3200;
  std::complex<double> acc = 0.0;
  for (std::size_t n = 0; n < len; ++n) {
    const double ang = -2.0 * pi * f * static_cast<double>(start + n) / fs;
    acc += y.samples[start + n] * std::complex<double>(std::cos(ang), std::sin(ang));
  }
  const double amp = 2.0 * std::abs(acc) / static_cast<double>(len);
  const auto h = transfer_function(ch, {f, 1.0, 2});
  CHECK(amp == Catch::Approx(std::abs(h[0])).epsilon(0.005));
}

TEST_CASE("apply_channel is linear") {
  const auto ch = draw_realization(two_tap(), 0, ChannelMode::fixed);
  const auto x = noise_signal(10, 256, 8e6);
  const auto y = noise_signal(11, 256, 8e6);
  RealSignal combo = x;
  for (std::size_t n = 0; n < combo.size(); ++n)
    combo.samples[n] = 1.7 * x.samples[n] - 0.4 * y.samples[n];
  const auto lhs = apply_channel(combo, ch);
  const auto fx = apply_channel(x, ch);
  const auto fy = apply_channel(y, ch);
  for (std::size_t n = 0; n < lhs.size(); ++n)
    CHECK(lhs.samples[n] ==
          Catch::Approx(1.7 * fx.samples[n] - 0.4 * fy.samples[n]).margin(1e-12));
}

TEST_CASE("output grows by the max delay and the head is the first tap alone") {
  const auto ch = draw_realization(two_tap(), 0, ChannelMode::fixed);
  const auto x = noise_signal(4, 64, 8e6);
  const auto y = apply_channel(x, ch);
  CHECK(y.size() == x.size() + 8); // 1 us at 8 MHz
  for (std::size_t n = 0; n < 8; ++n)
    CHECK(y.samples[n] == Catch::Approx(x.samples[n]).margin(1e-15));
}

TEST_CASE("off-grid delays are a configuration error that names the fix") {
  const auto ch = draw_realization(two_tap(), 0, ChannelMode::fixed);
  const auto x = noise_signal(9, 64, 1.5e6); // 1 us -> 1.5 samples
  CHECK_THROWS_MATCHES(apply_channel(x, ch), config_error,
                       Catch::Matchers::MessageMatches(
                           Catch::Matchers::ContainsSubstring("sample rate")));
}

TEST_CASE("complex gains are rejected on the real path but run analytically") {
  const auto ch = draw_realization(two_tap(), 123, ChannelMode::rayleigh);
  const auto x = noise_signal(6, 64, 8e6);
  CHECK_THROWS_AS(apply_channel(x, ch), config_error);
  CHECK_NOTHROW(apply_channel(x, to_real_gains(ch)));

  ComplexSignal z{{}, 8e6, 0.0};
  z.samples.resize(64);
  for (std::size_t n = 0; n < z.size(); ++n) z.samples[n] = {x.samples[n], 0.0};
  CHECK_NOTHROW(apply_channel(z, ch));
}

TEST_CASE("awgn no-noise sentinel returns the input untouched") {
  const auto x = noise_signal(8, 128, 1e6);
  const auto y = add_awgn(x, std::numeric_limits<double>::infinity(), 42);
  for (std::size_t n = 0; n < x.size(); ++n)
    CHECK(y.samples[n] == x.samples[n]);
}

TEST_CASE("awgn at 0 dB adds noise at the signal power") {
  RealSignal x{{}, 1e6, 0.0};
  x.samples.resize(1000000);
  for (std::size_t n = 0; n < x.size(); ++n)
    x.samples[n] = std::numbers::sqrt2 * std::cos(2.0 * pi * 0.01 * static_cast<double>(n));
  const double p = mean_power(x);
  const auto y = add_awgn(x, 0.0, 9001);
  double np = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double d = y.samples[n] - x.samples[n];
    np += d * d;
  }
  np /= static_cast<double>(x.size());
  CHECK(np == Catch::Approx(p).epsilon(0.02));
}

TEST_CASE("awgn is deterministic per seed") {
  const auto x = noise_signal(12, 512, 1e6);
  const auto a = add_awgn(x, 10.0, 5);
  const auto b = add_awgn(x, 10.0, 5);
  const auto c = add_awgn(x, 10.0, 6);
  bool same = true, differs = false;
  for (std::size_t n = 0; n < x.size(); ++n) {
    same = same && (a.samples[n] == b.samples[n]);
    differs = differs || (a.samples[n] != c.samples[n]);
  }
  CHECK(same);
  CHECK(differs);
}

TEST_CASE("awgn rejects zero-power input") {
  RealSignal z{std::vector<double>(64, 0.0), 1e6, 0.0};
  CHECK_THROWS_AS(add_awgn(z, 10.0, 1), domain_error);
}
