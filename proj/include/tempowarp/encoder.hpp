#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tempowarp/common.hpp"
#include "tempowarp/dsp.hpp"

namespace tempowarp::encoder {

using Embedding = Eigen::VectorXf;

/// One track: excerpt-level embeddings plus their time-line average, with
/// optional tempo and tag ground truth.
struct TrackRecord {
  std::string track_id;
  std::vector<Embedding> excerpts;  // at least one
  Embedding track_embedding;        // arithmetic mean of the excerpts
  std::optional<float> tempo_bpm;
  std::vector<std::string> tags;    // sorted, unique
};

/// Builds a record with the track embedding and tag normalization applied.
TrackRecord make_track_record(std::string track_id,
                              std::vector<Embedding> excerpts,
                              std::optional<float> tempo_bpm,
                              std::vector<std::string> tags);

enum class Provenance : std::uint8_t { File = 0, SyntheticOracle = 1, MelEncoder = 2 };

struct EmbeddingStore {
  std::vector<TrackRecord> records;
  int dim = 0;
  Provenance provenance = Provenance::File;

  std::size_t size() const { return records.size(); }
  const TrackRecord* find(const std::string& track_id) const;
  void validate() const;  // unique ids, uniform dims, invariants
};

/// Synthetic tempo-parametric embedding provider: a fixed random two-layer
/// map from (log tempo, style) to D dimensions, smooth and injective in log
/// tempo. Serves as a controllable stand-in for a real frozen encoder.
struct OracleConfig {
  int dim = 64;
  int style_dim = 8;
  int hidden = 32;
  std::uint64_t seed = 7;
  float noise_sigma = 0.0f;

  void validate() const;
};

class TempoOracle {
 public:
  explicit TempoOracle(const OracleConfig& config);

  /// z = W2 * tanh(W1 * [log2(tempo/120); style] + b1) + b2. Tempo enters on
  /// a log2 axis (centered at 120 BPM) so a stretch by tau is exactly a shift
  /// of the first input coordinate. Deterministic.
  Embedding embed(float tempo_bpm, const Eigen::VectorXf& style) const;

  /// Same with additive N(0, noise_sigma^2) observation noise.
  Embedding embed(float tempo_bpm, const Eigen::VectorXf& style, Rng& noise_rng) const;

  const OracleConfig& config() const { return config_; }

 private:
  OracleConfig config_;
  Eigen::MatrixXf w1_, w2_;
  Eigen::VectorXf b1_, b2_;
};

/// One-shot convenience wrapper around TempoOracle.
Embedding oracle_embed(float tempo_bpm, const Eigen::VectorXf& style,
                       const OracleConfig& config);

/// Frozen random-projection encoder over mel spectrograms: one tanh layer
/// from the flattened U x M excerpt to D dims. Never trained; stands in for
/// a real embedding network in end-to-end desk runs.
class MelEncoder {
 public:
  MelEncoder(int mel_bands, int frames, int dim, std::uint64_t seed);

  Embedding embed(const dsp::MelSpectrogram& mel) const;  // shape-checked

  int dim() const { return static_cast<int>(projection_.rows()); }
  int mel_bands() const { return mel_bands_; }
  int frames() const { return frames_; }

 private:
  Eigen::MatrixXf projection_;
  Eigen::VectorXf bias_;
  int mel_bands_;
  int frames_;
};

/// Synthetic store plus the ground truth that generated it (per-record style
/// vectors and cluster ids), which oracle-backed augmentation providers need.
struct SyntheticDataset {
  EmbeddingStore store;
  std::vector<Eigen::VectorXf> styles;  // per record
  std::vector<int> style_cluster;       // per record
  OracleConfig oracle_config;
};

/// Tempi are drawn log-uniform over [tempo_min, tempo_max]; styles cluster
/// around n_styles random centers and every member of a cluster carries that
/// cluster's tag set.
SyntheticDataset generate_synthetic_dataset(int n_tracks, float tempo_min,
                                            float tempo_max, int n_styles,
                                            int tags_per_style,
                                            const OracleConfig& config, Rng& rng);

EmbeddingStore generate_synthetic_store(int n_tracks, float tempo_min,
                                        float tempo_max, int n_styles,
                                        int tags_per_style,
                                        const OracleConfig& config, Rng& rng);

/// Arithmetic mean of excerpt embeddings (the track-level embedding).
Embedding average_track_embedding(std::span<const Embedding> excerpts);

}  // namespace tempowarp::encoder
