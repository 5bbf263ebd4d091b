#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "tempowarp/dsp.hpp"

using namespace tempowarp;
using dsp::MelConfig;
using dsp::MelSpectrogram;
using dsp::StretchFactor;

namespace {

// Independent mel pipeline: periodic Hann window, direct double-precision
// DFT (no FFT), filterbank pooling, floor, log10. Shares only the filterbank
// matrix with the implementation under test.
MelSpectrogram naive_mel(std::span<const float> wave, const MelConfig& cfg) {
  const int frames = cfg.frame_count(wave.size());
  const int bins = cfg.dft_size / 2 + 1;
  const Eigen::MatrixXf fb = dsp::make_mel_filterbank(cfg);

  MelSpectrogram out;
  out.config = cfg;
  out.data.resize(cfg.mel_bands, frames);
  const double pi = 3.14159265358979323846;
  for (int m = 0; m < frames; ++m) {
    std::vector<double> mags(bins);
    for (int k = 0; k < bins; ++k) {
      double re = 0.0, im = 0.0;
      for (int i = 0; i < cfg.window_size; ++i) {
        double w = 0.5 * (1.0 - std::cos(2.0 * pi * i / cfg.window_size));
        double x = w * wave[static_cast<std::size_t>(m) * cfg.hop + i];
        double ang = 2.0 * pi * k * i / cfg.dft_size;
        re += x * std::cos(ang);
        im -= x * std::sin(ang);
      }
      mags[k] = std::sqrt(re * re + im * im);
    }
    for (int u = 0; u < cfg.mel_bands; ++u) {
      double e = 0.0;
      for (int k = 0; k < bins; ++k) e += static_cast<double>(fb(u, k)) * mags[k];
      float energy = static_cast<float>(e);
      out.data(u, m) = std::log10(std::max(cfg.amplitude_floor, energy));
    }
  }
  return out;
}

std::vector<float> random_wave(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> w(n);
  for (auto& s : w) s = static_cast<float>(rng.uniform(-1.0, 1.0));
  return w;
}

// Full dense not-a-knot system: interior moment equations plus third-
// derivative continuity at the second and second-to-last knots, solved with
// a pivoted LU instead of the specialized collapse + Thomas recurrence.
std::vector<double> dense_not_a_knot_moments(const std::vector<float>& y) {
  const int n = static_cast<int>(y.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  for (int i = 1; i < n - 1; ++i) {
    a(i, i - 1) = 1.0;
    a(i, i) = 4.0;
    a(i, i + 1) = 1.0;
    b(i) = 6.0 * (static_cast<double>(y[i - 1]) - 2.0 * y[i] + y[i + 1]);
  }
  a(0, 0) = 1.0;
  a(0, 1) = -2.0;
  a(0, 2) = 1.0;
  a(n - 1, n - 3) = 1.0;
  a(n - 1, n - 2) = -2.0;
  a(n - 1, n - 1) = 1.0;
  Eigen::VectorXd m = a.fullPivLu().solve(b);
  return {m.data(), m.data() + n};
}

double moment_form_eval(const std::vector<float>& y,
                        const std::vector<double>& m, double t) {
  const int n = static_cast<int>(y.size());
  int i = std::min(static_cast<int>(t), n - 2);
  double s = t - i;
  double a = 1.0 - s;
  return a * y[i] + s * y[i + 1] + (m[i] / 6.0) * (a * a * a - a) +
         (m[i + 1] / 6.0) * (s * s * s - s);
}

MelSpectrogram random_mel(int bands, int frames, std::uint64_t seed) {
  Rng rng(seed);
  MelSpectrogram mel;
  mel.config.mel_bands = bands;
  mel.data.resize(bands, frames);
  for (int u = 0; u < bands; ++u)
    for (int m = 0; m < frames; ++m)
      mel.data(u, m) = static_cast<float>(rng.uniform(-8.0, 2.0));
  return mel;
}

}  // namespace

TEST_CASE("hz/mel conversion anchors and round trip") {
  CHECK(dsp::hz_to_mel(0.0) == doctest::Approx(0.0));
  // 2595 * log10(2): the scale's defining anchor at 700 Hz.
  CHECK(dsp::hz_to_mel(700.0) == doctest::Approx(781.177).epsilon(1e-5));
  CHECK(dsp::hz_to_mel(8000.0) == doctest::Approx(2840.0377).epsilon(1e-5));
  CHECK(dsp::mel_to_hz(781.177) == doctest::Approx(700.0).epsilon(1e-5));

  double prev = -1.0;
  for (double hz = 0.0; hz <= 12000.0; hz += 37.5) {
    CHECK(dsp::mel_to_hz(dsp::hz_to_mel(hz)) == doctest::Approx(hz).epsilon(1e-9));
    double mel = dsp::hz_to_mel(hz);
    CHECK(mel > prev);
    prev = mel;
  }
}

TEST_CASE("frame count: no padding, first frame fully inside") {
  MelConfig cfg;  // N=400, hop=160
  CHECK(cfg.frame_count(400) == 1);
  CHECK(cfg.frame_count(559) == 1);
  CHECK(cfg.frame_count(560) == 2);
  CHECK(cfg.frame_count(48000) == 298);
  CHECK(cfg.frames_for_seconds(3.0) == 298);
  CHECK_THROWS_AS(cfg.frame_count(399), DataError);
}

TEST_CASE("mel config validation") {
  MelConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  SUBCASE("window larger than dft") {
    cfg.window_size = cfg.dft_size + 1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("zero hop") {
    cfg.hop = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("non-positive floor") {
    cfg.amplitude_floor = 0.0f;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
  SUBCASE("no bands") {
    cfg.mel_bands = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
  }
}

TEST_CASE("mel filterbank structure") {
  MelConfig cfg;
  const Eigen::MatrixXf fb = dsp::make_mel_filterbank(cfg);
  REQUIRE(fb.rows() == cfg.mel_bands);
  REQUIRE(fb.cols() == cfg.dft_size / 2 + 1);
  CHECK(fb.minCoeff() >= 0.0f);
  CHECK(fb.maxCoeff() <= 1.0f);
  // Every triangle must catch at least one DFT bin at the default sizes.
  for (int u = 0; u < fb.rows(); ++u) CHECK(fb.row(u).sum() > 0.0f);
}

TEST_CASE("compute_mel matches a direct double-precision DFT oracle") {
  MelConfig cfg;
  cfg.sample_rate = 8000;
  cfg.window_size = 32;
  cfg.hop = 16;
  cfg.mel_bands = 8;

  SUBCASE("power-of-two dft (fft path)") { cfg.dft_size = 64; }
  SUBCASE("non-power-of-two dft (direct path)") { cfg.dft_size = 48; }

  const auto wave = random_wave(200, 42);
  const MelSpectrogram got = dsp::compute_mel(wave, cfg);
  const MelSpectrogram want = naive_mel(wave, cfg);
  REQUIRE(got.frames() == want.frames());
  REQUIRE(got.frames() == (200 - 32) / 16 + 1);
  REQUIRE(got.bands() == 8);
  const float diff = (got.data - want.data).cwiseAbs().maxCoeff();
  CHECK(diff < 1e-4f);
}

TEST_CASE("compute_mel edge behavior") {
  MelConfig cfg;
  cfg.sample_rate = 8000;
  cfg.dft_size = 64;
  cfg.window_size = 32;
  cfg.hop = 16;
  cfg.mel_bands = 8;

  SUBCASE("silence hits the amplitude floor exactly") {
    std::vector<float> silence(100, 0.0f);
    const auto mel = dsp::compute_mel(silence, cfg);
    const float want = std::log10(cfg.amplitude_floor);
    CHECK((mel.data.array() == want).all());
  }
  SUBCASE("non-finite samples are rejected") {
    auto wave = random_wave(100, 1);
    wave[50] = std::numeric_limits<float>::quiet_NaN();
    CHECK_THROWS_AS(dsp::compute_mel(wave, cfg), DataError);
  }
  SUBCASE("output is always finite") {
    auto wave = random_wave(100, 2);
    for (auto& s : wave) s *= 1e-9f;  // deep below the floor
    const auto mel = dsp::compute_mel(wave, cfg);
    CHECK(mel.data.allFinite());
  }
}

TEST_CASE("spline reproduces cubic polynomials") {
  auto p = [](double t) { return 0.3 * t * t * t - 2.0 * t * t + 0.5 * t + 1.0; };
  std::vector<float> y(9);
  for (int i = 0; i < 9; ++i) y[i] = static_cast<float>(p(i));
  dsp::CubicSplineNotAKnot spline(y);

  Rng rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    double t = rng.uniform(0.0, 8.0);
    CHECK(std::abs(spline(t) - p(t)) < 1e-4);  // knots stored as float
  }
}

TEST_CASE("spline interpolates knot values exactly") {
  Rng rng(11);
  std::vector<float> y(13);
  for (auto& v : y) v = static_cast<float>(rng.uniform(-5.0, 5.0));
  dsp::CubicSplineNotAKnot spline(y);
  for (int i = 0; i < 13; ++i)
    CHECK(std::abs(spline(static_cast<double>(i)) - y[i]) < 1e-12);
}

TEST_CASE("spline matches a dense LU not-a-knot solve") {
  Rng rng(23);
  std::vector<float> y(12);
  for (auto& v : y) v = static_cast<float>(rng.uniform(-3.0, 3.0));
  dsp::CubicSplineNotAKnot spline(y);
  const std::vector<double> m = dense_not_a_knot_moments(y);

  for (int trial = 0; trial < 50; ++trial) {
    double t = rng.uniform(0.0, 11.0);
    CHECK(std::abs(spline(t) - moment_form_eval(y, m, t)) < 1e-9);
  }
}

TEST_CASE("spline small-n cases") {
  SUBCASE("two knots: straight line") {
    std::vector<float> y = {2.0f, 5.0f};
    dsp::CubicSplineNotAKnot spline(y);
    CHECK(spline(0.5) == doctest::Approx(3.5));
    CHECK(spline(0.25) == doctest::Approx(2.75));
  }
  SUBCASE("three knots: single parabola") {
    std::vector<float> y = {0.0f, 1.0f, 4.0f};  // t^2 at t = 0, 1, 2
    dsp::CubicSplineNotAKnot spline(y);
    CHECK(spline(0.5) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(spline(1.7) == doctest::Approx(2.89).epsilon(1e-9));
  }
  SUBCASE("fewer than two knots is an error") {
    std::vector<float> y = {1.0f};
    CHECK_THROWS_AS(dsp::CubicSplineNotAKnot{y}, DataError);
  }
}

TEST_CASE("spline never extrapolates") {
  std::vector<float> y = {0.0f, 1.0f, 0.0f, 1.0f};
  dsp::CubicSplineNotAKnot spline(y);
  CHECK_NOTHROW(spline(0.0));
  CHECK_NOTHROW(spline(3.0));
  CHECK_THROWS_AS(spline(-0.5), DataError);
  CHECK_THROWS_AS(spline(3.5), DataError);
  CHECK_THROWS_AS(spline(std::numeric_limits<double>::quiet_NaN()), DataError);
}

TEST_CASE("time stretch at tau = 1 is the identity") {
  const auto mel = random_mel(6, 20, 3);
  const auto got = dsp::time_stretch_mel(mel, StretchFactor(1.0f), 20);
  REQUIRE(got.frames() == 20);
  REQUIRE(got.bands() == 6);
  CHECK((got.data - mel.data).cwiseAbs().maxCoeff() < 1e-6f);
}

TEST_CASE("time stretch equals per-band spline evaluation") {
  const auto mel = random_mel(4, 15, 5);
  const float tau = 1.3f;
  const int out_frames = 10;  // 1.3 * 9 = 11.7 <= 14
  const auto got = dsp::time_stretch_mel(mel, StretchFactor(tau), out_frames);
  for (int u = 0; u < 4; ++u) {
    std::vector<float> band(15);
    for (int m = 0; m < 15; ++m) band[m] = mel.data(u, m);
    dsp::CubicSplineNotAKnot spline(band);
    for (int m = 0; m < out_frames; ++m)
      CHECK(std::abs(got.data(u, m) - spline(static_cast<double>(tau) * m)) < 1e-6);
  }
}

TEST_CASE("time stretch support bounds") {
  const auto mel = random_mel(3, 10, 9);
  // tau * (out_frames - 1) <= 9: seven output frames fit, eight do not.
  CHECK_NOTHROW(dsp::time_stretch_mel(mel, StretchFactor(1.5f), 7));
  CHECK_THROWS_AS(dsp::time_stretch_mel(mel, StretchFactor(1.5f), 8), DataError);
  CHECK_THROWS_AS(dsp::time_stretch_mel(mel, StretchFactor(1.0f), 0), ConfigError);

  const auto tiny = random_mel(3, 1, 9);
  CHECK_THROWS_AS(dsp::time_stretch_mel(tiny, StretchFactor(1.0f), 1), DataError);
}

TEST_CASE("stretch factor guards") {
  CHECK_THROWS_AS(StretchFactor(0.0f), DataError);
  CHECK_THROWS_AS(StretchFactor(-1.0f), DataError);
  CHECK_THROWS_AS(StretchFactor(std::numeric_limits<float>::infinity()), DataError);
  CHECK(StretchFactor(1.25f).tau == 1.25f);
}

TEST_CASE("stretch sampler follows the log-uniform law") {
  constexpr int n = 100000;
  constexpr double tau_min = 0.75, tau_max = 1.5;
  Rng rng(2024);
  std::vector<double> taus(n);
  for (auto& t : taus) {
    t = dsp::sample_stretch_factor(rng, tau_min, tau_max).tau;
    REQUIRE(t >= tau_min);
    REQUIRE(t <= tau_max);
  }
  std::sort(taus.begin(), taus.end());

  // Kolmogorov-Smirnov against F(t) = ln(t/tau_min) / ln(tau_max/tau_min),
  // alpha = 0.01 critical value 1.6276 / sqrt(n).
  const double log_ratio = std::log(tau_max / tau_min);
  double ks = 0.0;
  for (int i = 0; i < n; ++i) {
    double f = std::log(taus[i] / tau_min) / log_ratio;
    ks = std::max(ks, std::abs((i + 1.0) / n - f));
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
  }
  CHECK(ks < 1.6276 / std::sqrt(static_cast<double>(n)));

  // The median of a log-uniform draw is the geometric mean of the bounds.
  const double median = taus[n / 2];
  CHECK(median == doctest::Approx(std::sqrt(tau_min * tau_max)).epsilon(0.005));
}

TEST_CASE("stretch sampler bound validation") {
  Rng rng(1);
  CHECK_THROWS_AS(dsp::sample_stretch_factor(rng, 0.0f, 1.5f), ConfigError);
  CHECK_THROWS_AS(dsp::sample_stretch_factor(rng, 1.5f, 0.75f), ConfigError);
  CHECK_THROWS_AS(dsp::sample_stretch_factor(rng, 1.0f, 1.0f), ConfigError);
}
