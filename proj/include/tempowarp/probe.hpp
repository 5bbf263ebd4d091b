#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tempowarp/common.hpp"
#include "tempowarp/encoder.hpp"
#include "tempowarp/nn.hpp"
#include "tempowarp/translator.hpp"

namespace tempowarp::probe {

using encoder::Embedding;

/// Integer-BPM class grid: 30..300 inclusive.
inline constexpr int kTempoClassCount = 271;
inline constexpr int kMinClassBpm = 30;
inline constexpr int kMaxClassBpm = 300;

/// class = clamp(round(bpm), 30, 300) - 30. Out-of-range tempi clamp to the
/// boundary class so every augmented sample stays usable.
int tempo_to_class(double bpm);
double class_to_tempo(int cls);

/// Tempo classifier head: D -> hidden (relu) -> 271 logits, with inverted
/// dropout on the hidden layer during training only.
struct ProbeModel {
  nn::DenseNet net;
  float dropout_rate = 0.75f;

  int embedding_dim() const;
  void validate() const;  // 271 outputs, dropout in [0, 1)
};

ProbeModel make_probe(int embedding_dim, int hidden_width, Rng& rng,
                      float dropout_rate = 0.75f);

enum class AugmentKind : std::uint8_t {
  None = 0,
  Translation = 1,
  Mel = 2,
  InputDropout = 3,
  Gaussian = 4,
  DropoutPlusGaussian = 5,
};

struct AugmentStrategy {
  AugmentKind kind = AugmentKind::None;
  // Default noise levels follow the published augmentation-baseline protocol
  // for wide production embeddings. On narrow embeddings every coordinate
  // carries far more of the signal, so desk-scale runs should dial these
  // down rather than corrupt a quarter of the input.
  float dropout_p = 0.25f;  // InputDropout / DropoutPlusGaussian
  float sigma = 0.05f;      // Gaussian / DropoutPlusGaussian

  void validate() const;  // p in [0, 1), sigma >= 0
  std::string name() const;
  /// Accepts none|translation|mel|dropout|gaussian|dropout+gaussian.
  static AugmentStrategy parse(std::string_view name);
  /// The six standard strategies in report order.
  static std::vector<AugmentStrategy> standard_six();
};

/// Re-encodes a record's audio at a stretched tempo; backs the mel strategy.
/// Implementations may rebuild from ground truth (oracle) or from cached mel.
class StretchEncodeProvider {
 public:
  virtual ~StretchEncodeProvider() = default;
  virtual Embedding stretch_encode(std::size_t record_index, float tau) = 0;
};

/// Oracle-backed provider: regenerates the embedding at tau * T from the
/// synthetic dataset's stored style vectors.
class OracleStretchEncode final : public StretchEncodeProvider {
 public:
  explicit OracleStretchEncode(const encoder::SyntheticDataset& dataset);
  Embedding stretch_encode(std::size_t record_index, float tau) override;

 private:
  const encoder::SyntheticDataset& dataset_;
  encoder::TempoOracle oracle_;
};

/// Mel-backed provider: stretches a cached mel excerpt and re-encodes it.
class MelStretchEncode final : public StretchEncodeProvider {
 public:
  MelStretchEncode(std::vector<dsp::MelSpectrogram> mels,
                   std::shared_ptr<const encoder::MelEncoder> enc);
  Embedding stretch_encode(std::size_t record_index, float tau) override;

 private:
  std::vector<dsp::MelSpectrogram> mels_;
  std::shared_ptr<const encoder::MelEncoder> encoder_;
};

/// Resources augmentation may draw on. tau_min == tau_max pins the stretch.
struct AugmentContext {
  const translator::TranslatorModel* translator = nullptr;
  StretchEncodeProvider* stretch_encoder = nullptr;
  float tau_min = 0.75f;
  float tau_max = 1.5f;
};

struct AugmentedBatch {
  Eigen::MatrixXf inputs;    // one embedding per row
  std::vector<int> classes;  // tempo class per row
};

/// Applies one strategy to a batch of store records (drawn by index).
/// Translation/mel strategies draw tau log-uniform per sample and relabel to
/// tempo_to_class(tau * T); the noise strategies keep labels unchanged.
AugmentedBatch augment_batch(const AugmentStrategy& strategy,
                             const encoder::EmbeddingStore& store,
                             std::span<const std::size_t> record_indices,
                             const AugmentContext& context, Rng& rng);

struct ProbeTrainConfig {
  int batch_size = 256;
  std::int64_t total_steps = 20000;
  float peak_lr = 1e-4f;
  std::int64_t warmup_steps = 200;
  float tau_min = 0.75f;
  float tau_max = 1.5f;
  std::uint64_t seed = 1;
  int hidden_width = 512;
  float dropout_rate = 0.75f;

  void validate() const;
};

struct ProbeTrainResult {
  ProbeModel model;
  std::vector<float> loss_history;
};

/// Adam + warmup/cosine schedule on softmax cross-entropy with per-batch
/// augmentation. Records without a tempo label are ignored; throws if none
/// remain. Seed-deterministic.
ProbeTrainResult train_probe(const encoder::EmbeddingStore& store,
                             const AugmentStrategy& strategy,
                             const ProbeTrainConfig& config,
                             const AugmentContext& context);

struct ProbeEvalResult {
  double acc1 = 0.0;
  double acc2 = 0.0;
  int evaluated = 0;  // labeled tracks scored
  int skipped = 0;    // unlabeled tracks ignored
};

/// Per track: excerpt logits are mean-pooled, argmax picks the class, and
/// class_to_tempo is scored with acc1/acc2 against the label. Deterministic
/// (no dropout at evaluation).
ProbeEvalResult eval_probe(const ProbeModel& model,
                           const encoder::EmbeddingStore& store,
                           int threads = 1);

}  // namespace tempowarp::probe
