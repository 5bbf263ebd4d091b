#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "tempowarp/common.hpp"
#include "tempowarp/dsp.hpp"
#include "tempowarp/encoder.hpp"
#include "tempowarp/nn.hpp"

namespace tempowarp::translator {

using encoder::Embedding;

/// How the stretch factor enters the network input. Log2 keeps the feature
/// symmetric around 0 at tau = 1 (doubling and halving are mirror images);
/// Linear feeds the raw ratio.
enum class TauEncoding : std::uint8_t { Log2 = 0, Linear = 1 };

float tau_feature(TauEncoding encoding, float tau);

/// The translation function f(z, tau; theta): an MLP from [z; tau feature]
/// back to embedding space.
struct TranslatorModel {
  nn::DenseNet net;  // (D + 1) -> H -> H -> D, relu/relu/identity
  TauEncoding tau_encoding = TauEncoding::Log2;
  int embedding_dim = 0;

  int hidden_width() const;
  void validate() const;  // input_dim = D + 1, output_dim = D
};

/// Fresh Glorot-initialized translator for D-dim embeddings with two hidden
/// layers of width H.
TranslatorModel make_translator(int embedding_dim, int hidden_width, Rng& rng,
                                TauEncoding encoding = TauEncoding::Log2);

struct TranslatorTrainConfig {
  int batch_size = 256;
  std::int64_t total_steps = 200000;  // desk-scale runs use ~20000
  float peak_lr = 1e-3f;
  std::int64_t warmup_steps = 2000;
  float tau_min = 0.75f;
  float tau_max = 1.5f;  // tau_min == tau_max pins every sample to that tau
  std::uint64_t seed = 1;
  int hidden_width = 2048;
  TauEncoding tau_encoding = TauEncoding::Log2;

  void validate() const;
};

/// One self-supervised training example: z at the original tempo, the
/// stretch factor, and z' at the stretched tempo.
struct TrainingTriple {
  Embedding source;
  dsp::StretchFactor tau;
  Embedding target;
};

/// Produces training triples at a requested stretch factor. Implementations
/// must be deterministic given the Rng stream.
class TripleSource {
 public:
  virtual ~TripleSource() = default;
  virtual int dim() const = 0;
  virtual TrainingTriple make(dsp::StretchFactor tau, Rng& rng) = 0;
};

/// Triples straight from the synthetic oracle: draws a log-uniform tempo and
/// a standard-normal style, then pairs oracle(T, s) with oracle(tau*T, s).
class OracleTripleSource final : public TripleSource {
 public:
  OracleTripleSource(const encoder::OracleConfig& config, float tempo_min,
                     float tempo_max);

  int dim() const override { return oracle_.config().dim; }
  TrainingTriple make(dsp::StretchFactor tau, Rng& rng) override;

  const encoder::TempoOracle& oracle() const { return oracle_; }

 private:
  encoder::TempoOracle oracle_;
  float tempo_min_;
  float tempo_max_;
};

using EncodeFn = std::function<Embedding(const dsp::MelSpectrogram&)>;

/// Builds (z, tau, z') from one mel excerpt: z encodes the first 3 s, z'
/// encodes the same 3 s worth of frames resampled by tau. The source mel
/// must supply enough trailing context (4.5 s covers the whole tau range up
/// to 1.5).
TrainingTriple make_triple_from_mel(const dsp::MelSpectrogram& mel,
                                    dsp::StretchFactor tau,
                                    const EncodeFn& encode);

/// Triples from a bank of mel excerpts through a frozen encoder; each call
/// picks a bank entry uniformly at random.
class MelTripleSource final : public TripleSource {
 public:
  MelTripleSource(std::vector<dsp::MelSpectrogram> bank,
                  std::shared_ptr<const encoder::MelEncoder> enc,
                  float max_tau);

  int dim() const override { return encoder_->dim(); }
  TrainingTriple make(dsp::StretchFactor tau, Rng& rng) override;

 private:
  std::vector<dsp::MelSpectrogram> bank_;
  std::shared_ptr<const encoder::MelEncoder> encoder_;
};

/// f(z, tau): deterministic, shape-checked single translation.
Embedding translate(const TranslatorModel& model, const Embedding& z,
                    dsp::StretchFactor tau);

/// Row-per-embedding batch translation; taus has either one entry (shared)
/// or one per row. Equals the corresponding single translates.
Eigen::MatrixXf translate_batch(const TranslatorModel& model,
                                const Eigen::MatrixXf& batch,
                                std::span<const float> taus);

struct TrainResult {
  TranslatorModel model;
  std::vector<float> loss_history;  // one entry per optimizer step
};

/// Adam on translation_loss under the warmup+cosine schedule. Seed-
/// deterministic; throws DivergenceError naming the step if the loss or a
/// gradient goes non-finite.
TrainResult train_translator(TripleSource& source,
                             const TranslatorTrainConfig& config);

}  // namespace tempowarp::translator
