#include "tempowarp/translator.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace tempowarp::translator {

float tau_feature(TauEncoding encoding, float tau) {
  if (!(tau > 0.0f) || !std::isfinite(tau))
    throw DataError("stretch factor must be finite and positive");
  return encoding == TauEncoding::Log2 ? std::log2(tau) : tau;
}

int TranslatorModel::hidden_width() const {
  return net.layers.empty() ? 0 : static_cast<int>(net.layers.front().bias.size());
}

void TranslatorModel::validate() const {
  net.validate();
  if (net.input_dim() != embedding_dim + 1)
    throw ConfigError("translator: input_dim must be embedding_dim + 1");
  if (net.output_dim() != embedding_dim)
    throw ConfigError("translator: output_dim must be embedding_dim");
}

TranslatorModel make_translator(int embedding_dim, int hidden_width, Rng& rng,
                                TauEncoding encoding) {
  if (embedding_dim < 1 || hidden_width < 1)
    throw ConfigError("translator: embedding_dim and hidden_width must be >= 1");
  TranslatorModel model;
  model.embedding_dim = embedding_dim;
  model.tau_encoding = encoding;
  model.net = nn::make_mlp(
      {embedding_dim + 1, hidden_width, hidden_width, embedding_dim},
      {nn::Activation::Relu, nn::Activation::Relu, nn::Activation::Identity},
      rng);
  return model;
}

void TranslatorTrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("translator config: batch_size >= 1");
  if (total_steps < 1) throw ConfigError("translator config: total_steps >= 1");
  if (warmup_steps < 0 || warmup_steps > total_steps)
    throw ConfigError("translator config: warmup must lie within total_steps");
  if (!(peak_lr > 0.0f)) throw ConfigError("translator config: peak_lr > 0");
  if (!(tau_min > 0.0f) || !(tau_min <= tau_max))
    throw ConfigError("translator config: need 0 < tau_min <= tau_max");
  if (hidden_width < 1) throw ConfigError("translator config: hidden_width >= 1");
}

OracleTripleSource::OracleTripleSource(const encoder::OracleConfig& config,
                                       float tempo_min, float tempo_max)
    : oracle_(config), tempo_min_(tempo_min), tempo_max_(tempo_max) {
  if (!(tempo_min > 0.0f) || !(tempo_min < tempo_max))
    throw ConfigError("oracle triple source: need 0 < tempo_min < tempo_max");
}

TrainingTriple OracleTripleSource::make(dsp::StretchFactor tau, Rng& rng) {
  const double log_ratio =
      std::log(static_cast<double>(tempo_max_) / tempo_min_);
  const float tempo =
      static_cast<float>(tempo_min_ * std::exp(rng.uniform() * log_ratio));
  Eigen::VectorXf style(oracle_.config().style_dim);
  for (Eigen::Index i = 0; i < style.size(); ++i)
    style[i] = static_cast<float>(rng.normal());
  return TrainingTriple{oracle_.embed(tempo, style), tau,
                        oracle_.embed(tau.tau * tempo, style)};
}

TrainingTriple make_triple_from_mel(const dsp::MelSpectrogram& mel,
                                    dsp::StretchFactor tau,
                                    const EncodeFn& encode) {
  const int out_frames = mel.config.frames_for_seconds(3.0);
  const int needed = static_cast<int>(
      std::ceil(static_cast<double>(tau.tau) * (out_frames - 1))) + 1;
  if (mel.frames() < out_frames || mel.frames() < needed)
    throw DataError("mel excerpt too short for a triple at tau=" +
                    std::to_string(tau.tau) + ": have " +
                    std::to_string(mel.frames()) + " frames, need " +
                    std::to_string(std::max(out_frames, needed)));

  dsp::MelSpectrogram head;
  head.config = mel.config;
  head.data = mel.data.leftCols(out_frames);
  dsp::MelSpectrogram stretched = dsp::time_stretch_mel(mel, tau, out_frames);
  return TrainingTriple{encode(head), tau, encode(stretched)};
}

MelTripleSource::MelTripleSource(std::vector<dsp::MelSpectrogram> bank,
                                 std::shared_ptr<const encoder::MelEncoder> enc,
                                 float max_tau)
    : bank_(std::move(bank)), encoder_(std::move(enc)) {
  if (bank_.empty()) throw DataError("mel triple source: empty bank");
  if (!encoder_) throw ConfigError("mel triple source: null encoder");
  if (!(max_tau > 0.0f)) throw ConfigError("mel triple source: max_tau > 0");
  for (const auto& mel : bank_) {
    const int out_frames = mel.config.frames_for_seconds(3.0);
    const int needed = static_cast<int>(std::ceil(
        static_cast<double>(max_tau) * (out_frames - 1))) + 1;
    if (out_frames != encoder_->frames() || mel.bands() != encoder_->mel_bands())
      throw DataError("mel triple source: bank entry shape does not match encoder");
    if (mel.frames() < needed)
      throw DataError("mel triple source: bank entry shorter than max_tau needs");
  }
}

TrainingTriple MelTripleSource::make(dsp::StretchFactor tau, Rng& rng) {
  const auto& mel = bank_[rng.below(bank_.size())];
  return make_triple_from_mel(
      mel, tau, [this](const dsp::MelSpectrogram& m) { return encoder_->embed(m); });
}

Embedding translate(const TranslatorModel& model, const Embedding& z,
                    dsp::StretchFactor tau) {
  if (z.size() != model.embedding_dim)
    throw DataError("translate: embedding has dim " + std::to_string(z.size()) +
                    ", model expects " + std::to_string(model.embedding_dim));
  Eigen::MatrixXf input(1, model.embedding_dim + 1);
  input.leftCols(model.embedding_dim) = z.transpose();
  input(0, model.embedding_dim) = tau_feature(model.tau_encoding, tau.tau);
  return nn::forward(model.net, input).row(0).transpose();
}

Eigen::MatrixXf translate_batch(const TranslatorModel& model,
                                const Eigen::MatrixXf& batch,
                                std::span<const float> taus) {
  if (batch.cols() != model.embedding_dim)
    throw DataError("translate_batch: batch dim mismatch");
  if (taus.size() != 1 && taus.size() != static_cast<std::size_t>(batch.rows()))
    throw DataError("translate_batch: need one tau total or one per row");
  Eigen::MatrixXf input(batch.rows(), model.embedding_dim + 1);
  input.leftCols(model.embedding_dim) = batch;
  for (Eigen::Index r = 0; r < batch.rows(); ++r) {
    const float tau = taus.size() == 1 ? taus[0] : taus[r];
    input(r, model.embedding_dim) = tau_feature(model.tau_encoding, tau);
  }
  return nn::forward(model.net, input);
}

TrainResult train_translator(TripleSource& source,
                             const TranslatorTrainConfig& config) {
  config.validate();
  const int dim = source.dim();

  Rng rng(config.seed);
  TrainResult result;
  result.model =
      make_translator(dim, config.hidden_width, rng, config.tau_encoding);
  result.loss_history.reserve(static_cast<std::size_t>(config.total_steps));

  nn::AdamState adam = nn::AdamState::init(result.model.net);
  nn::LrSchedule schedule{config.peak_lr, config.warmup_steps,
                          config.total_steps};
  schedule.validate();

  Eigen::MatrixXf input(config.batch_size, dim + 1);
  Eigen::MatrixXf target(config.batch_size, dim);
  for (std::int64_t step = 0; step < config.total_steps; ++step) {
    for (int b = 0; b < config.batch_size; ++b) {
      dsp::StretchFactor tau =
          config.tau_min == config.tau_max
              ? dsp::StretchFactor(config.tau_min)
              : dsp::sample_stretch_factor(rng, config.tau_min, config.tau_max);
      TrainingTriple triple = source.make(tau, rng);
      if (triple.source.size() != dim || triple.target.size() != dim)
        throw DataError("triple source returned wrong embedding dim");
      input.row(b).head(dim) = triple.source.transpose();
      input(b, dim) = tau_feature(config.tau_encoding, triple.tau.tau);
      target.row(b) = triple.target.transpose();
    }

    nn::ForwardTrace trace;
    Eigen::MatrixXf out = nn::forward(result.model.net, input, &trace);
    nn::LossResult loss = nn::translation_loss(out, target);
    if (!std::isfinite(loss.value))
      throw DivergenceError("translator training diverged at step " +
                            std::to_string(step));
    nn::Gradients grads = nn::backward(result.model.net, trace, loss.grad);
    nn::adam_step(result.model.net, grads, adam, nn::lr_at(schedule, step));
    result.loss_history.push_back(loss.value);
  }
  return result;
}

}  // namespace tempowarp::translator
