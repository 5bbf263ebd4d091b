#include "tempowarp/probe.hpp"

#include <algorithm>
#include <cmath>

#include "tempowarp/metrics.hpp"

namespace tempowarp::probe {

int tempo_to_class(double bpm) {
  if (!(bpm > 0.0) || !std::isfinite(bpm))
    throw DataError("tempo_to_class: bpm must be finite and positive");
  const double rounded = std::round(bpm);
  const double clamped = std::clamp(rounded, static_cast<double>(kMinClassBpm),
                                    static_cast<double>(kMaxClassBpm));
  return static_cast<int>(clamped) - kMinClassBpm;
}

double class_to_tempo(int cls) {
  if (cls < 0 || cls >= kTempoClassCount)
    throw DataError("class_to_tempo: class out of range");
  return static_cast<double>(cls + kMinClassBpm);
}

int ProbeModel::embedding_dim() const { return net.input_dim(); }

void ProbeModel::validate() const {
  net.validate();
  if (net.output_dim() != kTempoClassCount)
    throw ConfigError("probe: network must emit exactly 271 logits");
  if (!(dropout_rate >= 0.0f) || dropout_rate >= 1.0f)
    throw ConfigError("probe: dropout rate must lie in [0, 1)");
}

ProbeModel make_probe(int embedding_dim, int hidden_width, Rng& rng,
                      float dropout_rate) {
  if (embedding_dim < 1 || hidden_width < 1)
    throw ConfigError("probe: embedding_dim and hidden_width must be >= 1");
  ProbeModel model;
  model.dropout_rate = dropout_rate;
  model.net =
      nn::make_mlp({embedding_dim, hidden_width, kTempoClassCount},
                   {nn::Activation::Relu, nn::Activation::Identity}, rng);
  model.validate();
  return model;
}

void AugmentStrategy::validate() const {
  if (kind == AugmentKind::InputDropout || kind == AugmentKind::DropoutPlusGaussian)
    if (!(dropout_p >= 0.0f) || dropout_p >= 1.0f)
      throw ConfigError("augment: dropout p must lie in [0, 1)");
  if (kind == AugmentKind::Gaussian || kind == AugmentKind::DropoutPlusGaussian)
    if (!(sigma >= 0.0f))
      throw ConfigError("augment: sigma must be >= 0");
}

std::string AugmentStrategy::name() const {
  switch (kind) {
    case AugmentKind::None: return "none";
    case AugmentKind::Translation: return "translation";
    case AugmentKind::Mel: return "mel";
    case AugmentKind::InputDropout: return "dropout";
    case AugmentKind::Gaussian: return "gaussian";
    case AugmentKind::DropoutPlusGaussian: return "dropout+gaussian";
  }
  throw ConfigError("augment: unknown kind");
}

AugmentStrategy AugmentStrategy::parse(std::string_view name) {
  AugmentStrategy s;
  if (name == "none") s.kind = AugmentKind::None;
  else if (name == "translation") s.kind = AugmentKind::Translation;
  else if (name == "mel") s.kind = AugmentKind::Mel;
  else if (name == "dropout") s.kind = AugmentKind::InputDropout;
  else if (name == "gaussian") s.kind = AugmentKind::Gaussian;
  else if (name == "dropout+gaussian") s.kind = AugmentKind::DropoutPlusGaussian;
  else
    throw ConfigError("augment: unknown strategy '" + std::string(name) +
                      "' (expected none|translation|mel|dropout|gaussian|"
                      "dropout+gaussian)");
  return s;
}

std::vector<AugmentStrategy> AugmentStrategy::standard_six() {
  std::vector<AugmentStrategy> out;
  for (const char* n :
       {"none", "mel", "translation", "dropout", "gaussian", "dropout+gaussian"})
    out.push_back(parse(n));
  return out;
}

OracleStretchEncode::OracleStretchEncode(const encoder::SyntheticDataset& dataset)
    : dataset_(dataset), oracle_(dataset.oracle_config) {
  if (dataset.styles.size() != dataset.store.size())
    throw DataError("oracle stretch-encode: dataset styles missing");
}

Embedding OracleStretchEncode::stretch_encode(std::size_t record_index,
                                              float tau) {
  if (record_index >= dataset_.store.size())
    throw DataError("oracle stretch-encode: record index out of range");
  const auto& rec = dataset_.store.records[record_index];
  if (!rec.tempo_bpm)
    throw DataError("oracle stretch-encode: record has no tempo");
  return oracle_.embed(tau * *rec.tempo_bpm, dataset_.styles[record_index]);
}

MelStretchEncode::MelStretchEncode(std::vector<dsp::MelSpectrogram> mels,
                                   std::shared_ptr<const encoder::MelEncoder> enc)
    : mels_(std::move(mels)), encoder_(std::move(enc)) {
  if (!encoder_) throw ConfigError("mel stretch-encode: null encoder");
}

Embedding MelStretchEncode::stretch_encode(std::size_t record_index, float tau) {
  if (record_index >= mels_.size())
    throw DataError("mel stretch-encode: record index out of range");
  const auto& mel = mels_[record_index];
  dsp::MelSpectrogram stretched =
      dsp::time_stretch_mel(mel, dsp::StretchFactor(tau), encoder_->frames());
  return encoder_->embed(stretched);
}

namespace {

float draw_tau(const AugmentContext& ctx, Rng& rng) {
  if (ctx.tau_min == ctx.tau_max) return ctx.tau_min;
  return dsp::sample_stretch_factor(rng, ctx.tau_min, ctx.tau_max).tau;
}

const encoder::TrackRecord& labeled_record(const encoder::EmbeddingStore& store,
                                           std::size_t index) {
  if (index >= store.size())
    throw DataError("augment: record index out of range");
  const auto& rec = store.records[index];
  if (!rec.tempo_bpm) throw DataError("augment: record " + rec.track_id +
                                      " has no tempo label");
  return rec;
}

}  // namespace

AugmentedBatch augment_batch(const AugmentStrategy& strategy,
                             const encoder::EmbeddingStore& store,
                             std::span<const std::size_t> record_indices,
                             const AugmentContext& context, Rng& rng) {
  strategy.validate();
  if (record_indices.empty()) throw DataError("augment: empty batch");
  if (strategy.kind == AugmentKind::Translation && !context.translator)
    throw ConfigError("augment: translation strategy needs a translator");
  if (strategy.kind == AugmentKind::Mel && !context.stretch_encoder)
    throw ConfigError("augment: mel strategy needs a stretch-encode provider");
  if (!(context.tau_min > 0.0f) || !(context.tau_min <= context.tau_max))
    throw ConfigError("augment: need 0 < tau_min <= tau_max");

  const Eigen::Index n = static_cast<Eigen::Index>(record_indices.size());
  AugmentedBatch batch;
  batch.inputs.resize(n, store.dim);
  batch.classes.resize(record_indices.size());

  // Base embeddings and labels; records with several excerpts contribute a
  // uniformly drawn one.
  std::vector<float> tempi(record_indices.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = labeled_record(store, record_indices[i]);
    const auto& excerpts = rec.excerpts;
    const std::size_t pick =
        excerpts.size() == 1 ? 0 : rng.below(excerpts.size());
    batch.inputs.row(i) = excerpts[pick].transpose();
    tempi[i] = *rec.tempo_bpm;
    batch.classes[i] = tempo_to_class(tempi[i]);
  }

  switch (strategy.kind) {
    case AugmentKind::None:
      break;
    case AugmentKind::Translation: {
      std::vector<float> taus(record_indices.size());
      for (auto& t : taus) t = draw_tau(context, rng);
      batch.inputs =
          translator::translate_batch(*context.translator, batch.inputs, taus);
      for (Eigen::Index i = 0; i < n; ++i)
        batch.classes[i] = tempo_to_class(taus[i] * tempi[i]);
      break;
    }
    case AugmentKind::Mel: {
      for (Eigen::Index i = 0; i < n; ++i) {
        const float tau = draw_tau(context, rng);
        batch.inputs.row(i) =
            context.stretch_encoder->stretch_encode(record_indices[i], tau)
                .transpose();
        batch.classes[i] = tempo_to_class(tau * tempi[i]);
      }
      break;
    }
    case AugmentKind::InputDropout:
      batch.inputs = nn::dropout_apply(batch.inputs, strategy.dropout_p, rng);
      break;
    case AugmentKind::Gaussian:
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < batch.inputs.cols(); ++j)
          batch.inputs(i, j) += strategy.sigma * static_cast<float>(rng.normal());
      break;
    case AugmentKind::DropoutPlusGaussian:
      batch.inputs = nn::dropout_apply(batch.inputs, strategy.dropout_p, rng);
      for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < batch.inputs.cols(); ++j)
          batch.inputs(i, j) += strategy.sigma * static_cast<float>(rng.normal());
      break;
  }
  return batch;
}

void ProbeTrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("probe config: batch_size >= 1");
  if (total_steps < 1) throw ConfigError("probe config: total_steps >= 1");
  if (warmup_steps < 0 || warmup_steps > total_steps)
    throw ConfigError("probe config: warmup must lie within total_steps");
  if (!(peak_lr > 0.0f)) throw ConfigError("probe config: peak_lr > 0");
  if (!(tau_min > 0.0f) || !(tau_min <= tau_max))
    throw ConfigError("probe config: need 0 < tau_min <= tau_max");
  if (hidden_width < 1) throw ConfigError("probe config: hidden_width >= 1");
  if (!(dropout_rate >= 0.0f) || dropout_rate >= 1.0f)
    throw ConfigError("probe config: dropout rate must lie in [0, 1)");
}

ProbeTrainResult train_probe(const encoder::EmbeddingStore& store,
                             const AugmentStrategy& strategy,
                             const ProbeTrainConfig& config,
                             const AugmentContext& context) {
  config.validate();
  strategy.validate();

  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < store.records.size(); ++i)
    if (store.records[i].tempo_bpm) labeled.push_back(i);
  if (labeled.empty()) throw DataError("probe training: no records carry a tempo label");

  AugmentContext ctx = context;
  ctx.tau_min = config.tau_min;
  ctx.tau_max = config.tau_max;

  Rng rng(config.seed);
  ProbeTrainResult result;
  result.model = make_probe(store.dim, config.hidden_width, rng,
                            config.dropout_rate);
  result.loss_history.reserve(static_cast<std::size_t>(config.total_steps));

  nn::AdamState adam = nn::AdamState::init(result.model.net);
  nn::LrSchedule schedule{config.peak_lr, config.warmup_steps, config.total_steps};
  schedule.validate();

  // Dropout on the hidden layer's output only; logits stay intact.
  const std::vector<float> dropout_rates = {config.dropout_rate, 0.0f};

  std::vector<std::size_t> indices(config.batch_size);
  for (std::int64_t step = 0; step < config.total_steps; ++step) {
    for (auto& idx : indices) idx = labeled[rng.below(labeled.size())];
    AugmentedBatch batch = augment_batch(strategy, store, indices, ctx, rng);

    nn::ForwardTrace trace;
    Eigen::MatrixXf logits =
        nn::forward_train(result.model.net, batch.inputs, dropout_rates, rng, trace);
    nn::LossResult loss = nn::softmax_cross_entropy(logits, batch.classes);
    if (!std::isfinite(loss.value))
      throw DivergenceError("probe training diverged at step " +
                            std::to_string(step));
    nn::Gradients grads = nn::backward(result.model.net, trace, loss.grad);
    nn::adam_step(result.model.net, grads, adam, nn::lr_at(schedule, step));
    result.loss_history.push_back(loss.value);
  }
  return result;
}

ProbeEvalResult eval_probe(const ProbeModel& model,
                           const encoder::EmbeddingStore& store, int threads) {
  model.validate();
  if (store.dim != model.embedding_dim())
    throw DataError("probe eval: store dim " + std::to_string(store.dim) +
                    " does not match model dim " +
                    std::to_string(model.embedding_dim()));

  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < store.records.size(); ++i)
    if (store.records[i].tempo_bpm) labeled.push_back(i);

  ProbeEvalResult result;
  result.skipped = static_cast<int>(store.size() - labeled.size());
  if (labeled.empty()) throw DataError("probe eval: no labeled records");

  std::vector<double> predicted(labeled.size());
  parallel_for(static_cast<int>(labeled.size()), threads, [&](int q) {
    const auto& rec = store.records[labeled[static_cast<std::size_t>(q)]];
    Eigen::MatrixXf inputs(rec.excerpts.size(), store.dim);
    for (std::size_t e = 0; e < rec.excerpts.size(); ++e)
      inputs.row(static_cast<Eigen::Index>(e)) = rec.excerpts[e].transpose();
    Eigen::MatrixXf logits = nn::forward(model.net, inputs);
    Eigen::VectorXf pooled = logits.colwise().mean();
    Eigen::Index best = 0;
    pooled.maxCoeff(&best);
    predicted[static_cast<std::size_t>(q)] = class_to_tempo(static_cast<int>(best));
  });

  std::vector<double> a1(labeled.size()), a2(labeled.size());
  for (std::size_t q = 0; q < labeled.size(); ++q) {
    const double truth = *store.records[labeled[q]].tempo_bpm;
    a1[q] = metrics::acc1(predicted[q], truth) ? 1.0 : 0.0;
    a2[q] = metrics::acc2(predicted[q], truth) ? 1.0 : 0.0;
  }
  result.acc1 = metrics::mean(a1);
  result.acc2 = metrics::mean(a2);
  result.evaluated = static_cast<int>(labeled.size());
  return result;
}

}  // namespace tempowarp::probe
