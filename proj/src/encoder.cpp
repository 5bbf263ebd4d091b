#include "tempowarp/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <unordered_set>

namespace tempowarp::encoder {

namespace {

// Operating point of the oracle's log2-tempo axis. Centering keeps the tanh
// layer away from saturation over musical tempo ranges.
constexpr float kReferenceTempoBpm = 120.0f;

// Relative weight of the tempo input against one style coordinate. Large
// enough that small tempo differences dominate local embedding distances,
// which is what a tempo-sensitive encoder produces.
constexpr float kTempoInputGain = 12.0f;

// Spread of member styles around their cluster center.
constexpr float kStyleClusterSpread = 0.10f;

Eigen::MatrixXf random_uniform_matrix(Eigen::Index rows, Eigen::Index cols,
                                      float limit, Rng& rng) {
  Eigen::MatrixXf m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r)
      m(r, c) = static_cast<float>(rng.uniform(-limit, limit));
  return m;
}

}  // namespace

TrackRecord make_track_record(std::string track_id,
                              std::vector<Embedding> excerpts,
                              std::optional<float> tempo_bpm,
                              std::vector<std::string> tags) {
  if (excerpts.empty())
    throw DataError("track record needs at least one excerpt embedding");
  if (tempo_bpm && !(*tempo_bpm > 0.0f))
    throw DataError("track tempo must be positive");
  TrackRecord rec;
  rec.track_id = std::move(track_id);
  rec.track_embedding = average_track_embedding(excerpts);
  rec.excerpts = std::move(excerpts);
  rec.tempo_bpm = tempo_bpm;
  std::sort(tags.begin(), tags.end());
  tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
  rec.tags = std::move(tags);
  return rec;
}

const TrackRecord* EmbeddingStore::find(const std::string& track_id) const {
  for (const auto& r : records)
    if (r.track_id == track_id) return &r;
  return nullptr;
}

void EmbeddingStore::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    if (r.track_id.empty()) throw DataError("record with empty track id");
    if (!seen.insert(r.track_id).second)
      throw DataError("duplicate track id: " + r.track_id);
    if (r.excerpts.empty())
      throw DataError("record " + r.track_id + " has no excerpts");
    for (const auto& e : r.excerpts) {
      if (e.size() != dim)
        throw DataError("record " + r.track_id + " excerpt dim mismatch");
      if (!e.allFinite())
        throw DataError("record " + r.track_id + " has non-finite embedding");
    }
    if (r.track_embedding.size() != dim)
      throw DataError("record " + r.track_id + " track embedding dim mismatch");
    Embedding mean = average_track_embedding(r.excerpts);
    if ((mean - r.track_embedding).lpNorm<Eigen::Infinity>() > 1e-5f)
      throw DataError("record " + r.track_id +
                      " track embedding is not the excerpt mean");
    if (r.tempo_bpm && !(*r.tempo_bpm > 0.0f))
      throw DataError("record " + r.track_id + " has non-positive tempo");
  }
}

void OracleConfig::validate() const {
  if (dim < 1 || style_dim < 1 || hidden < 1)
    throw ConfigError("oracle config: dims must be >= 1");
  if (!(noise_sigma >= 0.0f))
    throw ConfigError("oracle config: noise_sigma must be >= 0");
}

TempoOracle::TempoOracle(const OracleConfig& config) : config_(config) {
  config.validate();
  Rng rng(config.seed);
  const int in = 1 + config.style_dim;
  const float l1 = std::sqrt(6.0f / static_cast<float>(in + config.hidden));
  const float l2 = std::sqrt(6.0f / static_cast<float>(config.hidden + config.dim));
  w1_ = random_uniform_matrix(config.hidden, in, l1, rng);
  w1_.col(0) *= kTempoInputGain;
  b1_ = random_uniform_matrix(config.hidden, 1, l1, rng).col(0);
  w2_ = random_uniform_matrix(config.dim, config.hidden, l2, rng);
  b2_ = random_uniform_matrix(config.dim, 1, l2, rng).col(0);
}

Embedding TempoOracle::embed(float tempo_bpm, const Eigen::VectorXf& style) const {
  if (!(tempo_bpm > 0.0f) || !std::isfinite(tempo_bpm))
    throw DataError("oracle: tempo must be finite and positive");
  if (style.size() != config_.style_dim)
    throw DataError("oracle: style dim mismatch");
  Eigen::VectorXf input(1 + config_.style_dim);
  input[0] = std::log2(tempo_bpm / kReferenceTempoBpm);
  input.tail(config_.style_dim) = style;
  Eigen::VectorXf hidden = ((w1_ * input + b1_).array().tanh()).matrix();
  return w2_ * hidden + b2_;
}

Embedding TempoOracle::embed(float tempo_bpm, const Eigen::VectorXf& style,
                             Rng& noise_rng) const {
  Embedding z = embed(tempo_bpm, style);
  if (config_.noise_sigma > 0.0f)
    for (Eigen::Index i = 0; i < z.size(); ++i)
      z[i] += config_.noise_sigma * static_cast<float>(noise_rng.normal());
  return z;
}

Embedding oracle_embed(float tempo_bpm, const Eigen::VectorXf& style,
                       const OracleConfig& config) {
  return TempoOracle(config).embed(tempo_bpm, style);
}

MelEncoder::MelEncoder(int mel_bands, int frames, int dim, std::uint64_t seed)
    : mel_bands_(mel_bands), frames_(frames) {
  if (mel_bands < 1 || frames < 1 || dim < 1)
    throw ConfigError("mel encoder: dims must be >= 1");
  Rng rng(seed);
  const Eigen::Index flat = static_cast<Eigen::Index>(mel_bands) * frames;
  const float limit = 1.0f / std::sqrt(static_cast<float>(flat));
  projection_ = random_uniform_matrix(dim, flat, limit, rng);
  bias_ = random_uniform_matrix(dim, 1, 0.1f, rng).col(0);
}

Embedding MelEncoder::embed(const dsp::MelSpectrogram& mel) const {
  if (mel.bands() != mel_bands_ || mel.frames() != frames_)
    throw DataError("mel encoder: spectrogram shape mismatch (expected " +
                    std::to_string(mel_bands_) + "x" + std::to_string(frames_) +
                    ", got " + std::to_string(mel.bands()) + "x" +
                    std::to_string(mel.frames()) + ")");
  Eigen::Map<const Eigen::VectorXf> flat(mel.data.data(), mel.data.size());
  return ((projection_ * flat + bias_).array().tanh()).matrix();
}

SyntheticDataset generate_synthetic_dataset(int n_tracks, float tempo_min,
                                            float tempo_max, int n_styles,
                                            int tags_per_style,
                                            const OracleConfig& config, Rng& rng) {
  if (n_tracks < 1) throw ConfigError("synthetic store: n_tracks must be >= 1");
  if (!(tempo_min > 0.0f) || !(tempo_min < tempo_max))
    throw ConfigError("synthetic store: need 0 < tempo_min < tempo_max");
  if (n_styles < 1 || tags_per_style < 0)
    throw ConfigError("synthetic store: invalid style/tag counts");
  config.validate();

  TempoOracle oracle(config);

  std::vector<Eigen::VectorXf> centers(n_styles);
  std::vector<std::vector<std::string>> cluster_tags(n_styles);
  for (int c = 0; c < n_styles; ++c) {
    centers[c].resize(config.style_dim);
    for (int i = 0; i < config.style_dim; ++i)
      centers[c][i] = static_cast<float>(rng.normal());
    for (int t = 0; t < tags_per_style; ++t) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "style%03d_tag%d", c, t);
      cluster_tags[c].emplace_back(buf);
    }
  }

  SyntheticDataset ds;
  ds.oracle_config = config;
  ds.store.dim = config.dim;
  ds.store.provenance = Provenance::SyntheticOracle;
  ds.store.records.reserve(n_tracks);
  ds.styles.reserve(n_tracks);
  ds.style_cluster.reserve(n_tracks);

  const double log_ratio = std::log(static_cast<double>(tempo_max) / tempo_min);
  for (int i = 0; i < n_tracks; ++i) {
    const float tempo =
        static_cast<float>(tempo_min * std::exp(rng.uniform() * log_ratio));
    const int cluster = static_cast<int>(rng.below(n_styles));
    Eigen::VectorXf style = centers[cluster];
    for (int j = 0; j < config.style_dim; ++j)
      style[j] += kStyleClusterSpread * static_cast<float>(rng.normal());

    Embedding z = config.noise_sigma > 0.0f ? oracle.embed(tempo, style, rng)
                                            : oracle.embed(tempo, style);
    char id[16];
    std::snprintf(id, sizeof(id), "trk%05d", i);
    ds.store.records.push_back(
        make_track_record(id, {std::move(z)}, tempo, cluster_tags[cluster]));
    ds.styles.push_back(std::move(style));
    ds.style_cluster.push_back(cluster);
  }
  ds.store.validate();
  return ds;
}

EmbeddingStore generate_synthetic_store(int n_tracks, float tempo_min,
                                        float tempo_max, int n_styles,
                                        int tags_per_style,
                                        const OracleConfig& config, Rng& rng) {
  return generate_synthetic_dataset(n_tracks, tempo_min, tempo_max, n_styles,
                                    tags_per_style, config, rng)
      .store;
}

Embedding average_track_embedding(std::span<const Embedding> excerpts) {
  if (excerpts.empty()) throw DataError("cannot average an empty excerpt list");
  const Eigen::Index d = excerpts.front().size();
  Embedding sum = Embedding::Zero(d);
  for (const auto& e : excerpts) {
    if (e.size() != d) throw DataError("excerpt dimension mismatch in average");
    sum += e;
  }
  return sum / static_cast<float>(excerpts.size());
}

}  // namespace tempowarp::encoder
