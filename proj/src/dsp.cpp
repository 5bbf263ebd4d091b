#include "tempowarp/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

namespace tempowarp::dsp {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 FFT.
void fft_radix2(std::vector<std::complex<double>>& a) {
  const int n = static_cast<int>(a.size());
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    double ang = -2.0 * kPi / len;
    std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      std::complex<double> w(1.0);
      for (int j = 0; j < len / 2; ++j) {
        std::complex<double> u = a[i + j];
        std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

/// |DFT| of the zero-padded frame, bins 0..K/2. Uses the radix-2 path when K
/// is a power of two and a direct DFT otherwise.
void spectrum_magnitude(const std::vector<double>& frame, int dft_size,
                        std::vector<double>& mags) {
  const int bins = dft_size / 2 + 1;
  mags.assign(bins, 0.0);
  if (is_power_of_two(dft_size)) {
    std::vector<std::complex<double>> buf(dft_size, {0.0, 0.0});
    for (std::size_t n = 0; n < frame.size(); ++n) buf[n] = frame[n];
    fft_radix2(buf);
    for (int k = 0; k < bins; ++k) mags[k] = std::abs(buf[k]);
    return;
  }
  for (int k = 0; k < bins; ++k) {
    double re = 0.0, im = 0.0;
    for (std::size_t n = 0; n < frame.size(); ++n) {
      double ang = -2.0 * kPi * k * static_cast<double>(n) / dft_size;
      re += frame[n] * std::cos(ang);
      im += frame[n] * std::sin(ang);
    }
    mags[k] = std::hypot(re, im);
  }
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

void MelConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("mel config: sample_rate must be positive");
  if (dft_size < 1) throw ConfigError("mel config: dft_size must be >= 1");
  if (window_size < 1 || window_size > dft_size)
    throw ConfigError("mel config: window_size must satisfy 1 <= N <= dft_size");
  if (hop < 1) throw ConfigError("mel config: hop must be >= 1");
  if (mel_bands < 1) throw ConfigError("mel config: mel_bands must be >= 1");
  if (!(amplitude_floor > 0.0f))
    throw ConfigError("mel config: amplitude_floor must be positive");
}

int MelConfig::frame_count(std::size_t samples) const {
  if (samples < static_cast<std::size_t>(window_size))
    throw DataError("waveform shorter than one analysis window");
  return static_cast<int>((samples - window_size) / hop) + 1;
}

int MelConfig::frames_for_seconds(double seconds) const {
  auto samples = static_cast<std::size_t>(seconds * sample_rate);
  return frame_count(samples);
}

StretchFactor::StretchFactor(float t) : tau(t) {
  if (!(t > 0.0f) || !std::isfinite(t))
    throw DataError("stretch factor must be finite and positive");
}

Eigen::MatrixXf make_mel_filterbank(const MelConfig& config) {
  config.validate();
  const int bins = config.dft_size / 2 + 1;
  const int u = config.mel_bands;
  const double mel_lo = hz_to_mel(0.0);
  const double mel_hi = hz_to_mel(config.sample_rate / 2.0);

  std::vector<double> mel_pts(u + 2);
  for (int i = 0; i < u + 2; ++i)
    mel_pts[i] = mel_lo + (mel_hi - mel_lo) * i / (u + 1);

  double prev_center = 0.0;
  for (int i = 1; i <= u; ++i) {
    double center = mel_to_hz(mel_pts[i]);
    if (center <= prev_center || center > config.sample_rate / 2.0 + 1e-9)
      throw ConfigError("mel filterbank: center frequencies not strictly increasing within Nyquist");
    prev_center = center;
  }

  Eigen::MatrixXf fb = Eigen::MatrixXf::Zero(u, bins);
  for (int k = 0; k < bins; ++k) {
    double mel_k = hz_to_mel(static_cast<double>(k) * config.sample_rate / config.dft_size);
    for (int m = 0; m < u; ++m) {
      double up = (mel_k - mel_pts[m]) / (mel_pts[m + 1] - mel_pts[m]);
      double down = (mel_pts[m + 2] - mel_k) / (mel_pts[m + 2] - mel_pts[m + 1]);
      double w = std::max(0.0, std::min(up, down));
      if (w > 0.0) fb(m, k) = static_cast<float>(w);
    }
  }
  return fb;
}

MelSpectrogram compute_mel(std::span<const float> waveform,
                           const MelConfig& config) {
  config.validate();
  for (float s : waveform)
    if (!std::isfinite(s)) throw DataError("waveform contains non-finite samples");
  const int frames = config.frame_count(waveform.size());

  const int n = config.window_size;
  std::vector<double> window(n);
  for (int i = 0; i < n; ++i)
    window[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / n));  // periodic Hann

  const Eigen::MatrixXf fb = make_mel_filterbank(config);
  const int bins = config.dft_size / 2 + 1;

  MelSpectrogram out;
  out.config = config;
  out.data.resize(config.mel_bands, frames);

  std::vector<double> frame(n);
  std::vector<double> mags;
  Eigen::VectorXf magf(bins);
  for (int m = 0; m < frames; ++m) {
    const std::size_t start = static_cast<std::size_t>(m) * config.hop;
    for (int i = 0; i < n; ++i) frame[i] = window[i] * waveform[start + i];
    spectrum_magnitude(frame, config.dft_size, mags);
    for (int k = 0; k < bins; ++k) magf[k] = static_cast<float>(mags[k]);
    Eigen::VectorXf energy = fb * magf;
    for (int u = 0; u < config.mel_bands; ++u)
      out.data(u, m) = std::log10(std::max(config.amplitude_floor, energy[u]));
  }
  return out;
}

CubicSplineNotAKnot::CubicSplineNotAKnot(std::span<const float> values) {
  const int n = static_cast<int>(values.size());
  if (n < 2) throw DataError("spline needs at least two knots");
  y_.assign(values.begin(), values.end());
  m_.assign(n, 0.0);
  if (n == 2) return;  // linear piece, zero curvature

  // Second central differences d_i = y[i-1] - 2 y[i] + y[i+1] (unit spacing).
  std::vector<double> d(n, 0.0);
  for (int i = 1; i < n - 1; ++i) d[i] = y_[i - 1] - 2.0 * y_[i] + y_[i + 1];

  if (n == 3) {
    // Not-a-knot on three points degenerates to a single parabola.
    m_[0] = m_[1] = m_[2] = d[1];
    return;
  }

  // With uniform spacing the not-a-knot conditions at both ends collapse the
  // first and last interior equations to M_1 = d_1 and M_{n-2} = d_{n-2};
  // the remaining interior moments solve a tridiagonal system with
  // diagonal 4 and off-diagonal 1.
  m_[1] = d[1];
  m_[n - 2] = d[n - 2];
  const int k = n - 4;  // unknowns M_2 .. M_{n-3}
  if (k > 0) {
    std::vector<double> diag(k, 4.0), rhs(k);
    for (int i = 0; i < k; ++i) rhs[i] = 6.0 * d[i + 2];
    rhs[0] -= m_[1];
    rhs[k - 1] -= m_[n - 2];
    for (int i = 1; i < k; ++i) {  // Thomas elimination
      double w = 1.0 / diag[i - 1];
      diag[i] -= w;
      rhs[i] -= w * rhs[i - 1];
    }
    m_[2 + k - 1] = rhs[k - 1] / diag[k - 1];
    for (int i = k - 2; i >= 0; --i)
      m_[2 + i] = (rhs[i] - m_[2 + i + 1]) / diag[i];
  }
  m_[0] = 2.0 * m_[1] - m_[2];
  m_[n - 1] = 2.0 * m_[n - 2] - m_[n - 3];
}

double CubicSplineNotAKnot::operator()(double t) const {
  const int n = static_cast<int>(y_.size());
  if (!std::isfinite(t) || t < 0.0 || t > static_cast<double>(n - 1))
    throw DataError("spline evaluation outside knot support");
  int i = std::min(static_cast<int>(t), n - 2);
  double s = t - i;
  double a = 1.0 - s;
  // Moment form with unit spacing; at s=0 this returns y_[i] exactly.
  return a * y_[i] + s * y_[i + 1] +
         (m_[i] / 6.0) * (a * a * a - a) + (m_[i + 1] / 6.0) * (s * s * s - s);
}

MelSpectrogram time_stretch_mel(const MelSpectrogram& mel, StretchFactor tau,
                                int out_frames) {
  if (out_frames < 1) throw ConfigError("time stretch: out_frames must be >= 1");
  const int src_frames = mel.frames();
  if (src_frames < 2) throw DataError("time stretch: need at least two source frames");
  const double last = static_cast<double>(tau.tau) * (out_frames - 1);
  if (last > static_cast<double>(src_frames - 1))
    throw DataError("time stretch: sample point beyond source support (insufficient context)");

  MelSpectrogram out;
  out.config = mel.config;
  out.data.resize(mel.bands(), out_frames);
  std::vector<float> band(src_frames);
  for (int u = 0; u < mel.bands(); ++u) {
    for (int m = 0; m < src_frames; ++m) band[m] = mel.data(u, m);
    CubicSplineNotAKnot spline(band);
    for (int m = 0; m < out_frames; ++m)
      out.data(u, m) = static_cast<float>(spline(static_cast<double>(tau.tau) * m));
  }
  return out;
}

StretchFactor sample_stretch_factor(Rng& rng, float tau_min, float tau_max) {
  if (!(tau_min > 0.0f) || !(tau_min < tau_max))
    throw ConfigError("stretch sampler: bounds must satisfy 0 < tau_min < tau_max");
  double u = rng.uniform();
  double tau = tau_min * std::pow(static_cast<double>(tau_max) / tau_min, u);
  return StretchFactor(static_cast<float>(tau));
}

}  // namespace tempowarp::dsp
