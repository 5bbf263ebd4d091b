#pragma once

#include <Eigen/Dense>
#include <span>
#include <vector>

#include "tempowarp/common.hpp"

namespace tempowarp::dsp {

/// HTK mel scale.
double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// STFT/mel front-end parameters. Defaults are explicit stand-ins chosen for
/// a 16 kHz mono pipeline; adjust them to match whatever encoder consumes the
/// spectrograms.
struct MelConfig {
  int sample_rate = 16000;      // Hz
  int dft_size = 2048;          // K
  int window_size = 400;        // N, Hann (periodic)
  int hop = 160;                // l
  int mel_bands = 96;           // U
  float amplitude_floor = 1e-10f;  // linear magnitude floor before log10

  void validate() const;  // throws ConfigError

  /// Frames produced from `samples` input samples: floor((len - N)/l) + 1.
  /// No padding; the first frame sits fully inside the signal.
  int frame_count(std::size_t samples) const;  // throws DataError if too short
  int frames_for_seconds(double seconds) const;
};

/// Log10 mel magnitudes, bands x frames.
struct MelSpectrogram {
  Eigen::MatrixXf data;  // mel_bands x frames
  MelConfig config;

  int bands() const { return static_cast<int>(data.rows()); }
  int frames() const { return static_cast<int>(data.cols()); }
  double duration_seconds() const {
    return static_cast<double>(frames()) * config.hop / config.sample_rate;
  }
};

/// Multiplicative tempo ratio; stretched tempo T' = tau * T.
struct StretchFactor {
  explicit StretchFactor(float t);
  float tau;
};

/// Triangular HTK mel filterbank, mel_bands x (dft_size/2 + 1). Triangles are
/// linear in mel. Center frequencies are strictly increasing and <= sr/2;
/// violations throw ConfigError.
Eigen::MatrixXf make_mel_filterbank(const MelConfig& config);

/// Log10 mel magnitudes of a mono waveform. The per-frame spectrum magnitude
/// (not power) is pooled through the filterbank, floored, then log10'd, so
/// every entry is finite for any finite input.
MelSpectrogram compute_mel(std::span<const float> waveform,
                           const MelConfig& config);

/// Resamples every band along time with a not-a-knot cubic spline evaluated
/// at t = tau*m for m in [0, out_frames). All sample points must lie inside
/// the source support: tau*(out_frames-1) <= frames-1, else DataError.
MelSpectrogram time_stretch_mel(const MelSpectrogram& mel, StretchFactor tau,
                                int out_frames);

/// Draws tau = tau_min * (tau_max/tau_min)^u with u ~ U[0,1), i.e. the
/// log-uniform density 1 / (tau * log(tau_max/tau_min)) on [tau_min, tau_max].
StretchFactor sample_stretch_factor(Rng& rng, float tau_min, float tau_max);

/// Cubic spline over uniformly spaced knots 0, 1, ..., n-1 with not-a-knot
/// boundary conditions (first two and last two pieces share one cubic).
/// Reproduces cubic polynomials exactly and interpolates knot values exactly.
class CubicSplineNotAKnot {
 public:
  explicit CubicSplineNotAKnot(std::span<const float> values);

  /// Evaluate at t in [0, n-1]; outside support throws DataError
  /// (never extrapolates).
  double operator()(double t) const;

  int size() const { return static_cast<int>(y_.size()); }

 private:
  std::vector<double> y_;  // knot values
  std::vector<double> m_;  // second derivatives at knots
};

}  // namespace tempowarp::dsp
