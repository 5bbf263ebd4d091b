#include "tempowarp/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "tempowarp/metrics.hpp"

namespace tempowarp::experiments {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

json parse_config_json(const std::string& text, const char* label) {
  json parsed = json::parse(text, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object())
    throw ConfigError(std::string(label) + ": config echo is not a JSON object");
  return parsed;
}

/// Deterministic subsample without replacement: partial Fisher-Yates, then
/// restored to ascending order so aggregation order is stable.
std::vector<std::size_t> pick_queries(std::vector<std::size_t> candidates,
                                      int max_queries, std::uint64_t seed) {
  if (max_queries > 0 &&
      candidates.size() > static_cast<std::size_t>(max_queries)) {
    Rng rng(seed ^ 0x715ea5u);
    for (int i = 0; i < max_queries; ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(rng.below(candidates.size() - i));
      std::swap(candidates[i], candidates[j]);
    }
    candidates.resize(static_cast<std::size_t>(max_queries));
    std::sort(candidates.begin(), candidates.end());
  }
  return candidates;
}

std::vector<std::size_t> labeled_indices(const encoder::EmbeddingStore& store) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < store.records.size(); ++i)
    if (store.records[i].tempo_bpm) out.push_back(i);
  return out;
}

std::vector<std::size_t> tagged_indices(const encoder::EmbeddingStore& store) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < store.records.size(); ++i)
    if (!store.records[i].tags.empty()) out.push_back(i);
  return out;
}

double mean_or_zero(const std::vector<double>& v) {
  return v.empty() ? 0.0 : metrics::mean(v);
}

}  // namespace

// ---- synthetic dataset spec ---------------------------------------------------

encoder::OracleConfig SyntheticSpec::oracle_config() const {
  encoder::OracleConfig config;
  config.dim = dim;
  config.style_dim = style_dim;
  config.hidden = oracle_hidden;
  config.seed = oracle_seed;
  config.noise_sigma = static_cast<float>(noise_sigma);
  return config;
}

void SyntheticSpec::validate() const {
  oracle_config().validate();
  if (tracks < 1) throw ConfigError("synthetic spec: tracks >= 1");
  if (styles < 1 || tags_per_style < 0)
    throw ConfigError("synthetic spec: invalid style/tag counts");
  if (!(tempo_min > 0.0f) || !(tempo_min < tempo_max))
    throw ConfigError("synthetic spec: need 0 < tempo_min < tempo_max");
}

std::string SyntheticSpec::to_json() const {
  ordered_json j;
  j["tracks"] = tracks;
  j["dim"] = dim;
  j["styles"] = styles;
  j["tags_per_style"] = tags_per_style;
  j["tempo_min"] = tempo_min;
  j["tempo_max"] = tempo_max;
  j["noise_sigma"] = noise_sigma;
  j["style_dim"] = style_dim;
  j["oracle_hidden"] = oracle_hidden;
  j["oracle_seed"] = oracle_seed;
  j["seed"] = seed;
  return j.dump();
}

SyntheticSpec SyntheticSpec::from_json(const std::string& text) {
  json j = parse_config_json(text, "synthetic spec");
  SyntheticSpec spec;
  spec.tracks = j.value("tracks", spec.tracks);
  spec.dim = j.value("dim", spec.dim);
  spec.styles = j.value("styles", spec.styles);
  spec.tags_per_style = j.value("tags_per_style", spec.tags_per_style);
  spec.tempo_min = j.value("tempo_min", spec.tempo_min);
  spec.tempo_max = j.value("tempo_max", spec.tempo_max);
  spec.noise_sigma = j.value("noise_sigma", spec.noise_sigma);
  spec.style_dim = j.value("style_dim", spec.style_dim);
  spec.oracle_hidden = j.value("oracle_hidden", spec.oracle_hidden);
  spec.oracle_seed = j.value("oracle_seed", spec.oracle_seed);
  spec.seed = j.value("seed", spec.seed);
  spec.validate();
  return spec;
}

encoder::SyntheticDataset make_dataset(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  return encoder::generate_synthetic_dataset(
      spec.tracks, static_cast<float>(spec.tempo_min),
      static_cast<float>(spec.tempo_max), spec.styles, spec.tags_per_style,
      spec.oracle_config(), rng);
}

// ---- tempo retrieval ----------------------------------------------------------

void TempoRetrievalConfig::validate() const {
  if (!(tau_lo > 0.0) || !(tau_lo <= tau_hi))
    throw ConfigError("tempo retrieval: need 0 < tau_lo <= tau_hi");
  if (!(tau_step > 0.0)) throw ConfigError("tempo retrieval: tau_step > 0");
  if (k < 1) throw ConfigError("tempo retrieval: k >= 1");
  if (max_queries < 0) throw ConfigError("tempo retrieval: max_queries >= 0");
  if (threads < 1) throw ConfigError("tempo retrieval: threads >= 1");
}

std::vector<double> TempoRetrievalConfig::tau_grid() const {
  std::vector<double> grid;
  // Walk an integer counter so accumulated float error cannot drop the
  // endpoint (0.5 + 30*0.05 must still land on 2.0).
  for (int i = 0;; ++i) {
    const double tau = tau_lo + static_cast<double>(i) * tau_step;
    if (tau > tau_hi * (1.0 + 1e-9)) break;
    grid.push_back(tau);
  }
  return grid;
}

std::string TempoRetrievalConfig::to_json() const {
  ordered_json j;
  j["tau_lo"] = tau_lo;
  j["tau_hi"] = tau_hi;
  j["tau_step"] = tau_step;
  j["k"] = k;
  j["max_queries"] = max_queries;
  j["threads"] = threads;
  j["seed"] = seed;
  j["metric"] = metric == retrieval::Metric::Cosine ? "cosine" : "euclidean";
  return j.dump();
}

TempoRetrievalConfig TempoRetrievalConfig::from_json(const std::string& text) {
  json j = parse_config_json(text, "tempo retrieval config");
  TempoRetrievalConfig config;
  config.tau_lo = j.value("tau_lo", config.tau_lo);
  config.tau_hi = j.value("tau_hi", config.tau_hi);
  config.tau_step = j.value("tau_step", config.tau_step);
  config.k = j.value("k", config.k);
  config.max_queries = j.value("max_queries", config.max_queries);
  config.threads = j.value("threads", config.threads);
  config.seed = j.value("seed", config.seed);
  const std::string metric = j.value("metric", "cosine");
  if (metric != "cosine" && metric != "euclidean")
    throw ConfigError("tempo retrieval: unknown metric '" + metric + "'");
  config.metric = metric == "cosine" ? retrieval::Metric::Cosine
                                     : retrieval::Metric::Euclidean;
  config.validate();
  return config;
}

io::ExperimentReport run_tempo_retrieval_experiment(
    const encoder::EmbeddingStore& store,
    const translator::TranslatorModel& model,
    const TempoRetrievalConfig& config) {
  config.validate();
  model.validate();
  if (store.dim != model.embedding_dim)
    throw DataError("tempo retrieval: store dim does not match translator dim");

  const std::vector<std::size_t> queries =
      pick_queries(labeled_indices(store), config.max_queries, config.seed);
  if (queries.empty())
    throw DataError("tempo retrieval: store has no tempo labels (field tempo_bpm)");

  retrieval::VectorIndex index = retrieval::VectorIndex::build(store, config.metric);

  const Eigen::Index n_q = static_cast<Eigen::Index>(queries.size());
  Eigen::MatrixXf base(n_q, store.dim);
  std::vector<std::string> exclude(queries.size());
  std::vector<double> truths(queries.size());
  std::vector<const metrics::TagSet*> query_tags(queries.size());
  for (Eigen::Index i = 0; i < n_q; ++i) {
    const auto& rec = store.records[queries[static_cast<std::size_t>(i)]];
    base.row(i) = rec.track_embedding.transpose();
    exclude[static_cast<std::size_t>(i)] = rec.track_id;
    truths[static_cast<std::size_t>(i)] = *rec.tempo_bpm;
    query_tags[static_cast<std::size_t>(i)] = &rec.tags;
  }

  // The untranslated neighborhoods do not depend on tau; fetch them once.
  const std::vector<retrieval::QueryResult> plain =
      index.knn_batch(base, config.k, exclude, config.threads);

  auto neighbor_tempi = [&](const retrieval::QueryResult& result) {
    std::vector<double> tempi;
    tempi.reserve(result.neighbors.size());
    for (const auto& n : result.neighbors) {
      const auto* rec = store.find(n.track_id);
      if (rec && rec->tempo_bpm) tempi.push_back(*rec->tempo_bpm);
    }
    return tempi;
  };
  auto neighbor_tagsets = [&](const retrieval::QueryResult& result) {
    std::vector<metrics::TagSet> tags;
    tags.reserve(result.neighbors.size());
    for (const auto& n : result.neighbors) {
      const auto* rec = store.find(n.track_id);
      tags.push_back(rec ? rec->tags : metrics::TagSet{});
    }
    return tags;
  };

  io::ExperimentReport report;
  report.experiment = "tempo_retrieval";
  report.config_json = config.to_json();
  report.seed = config.seed;

  int tagged_queries = 0;
  for (const auto* tags : query_tags)
    if (!tags->empty()) ++tagged_queries;

  for (double tau : config.tau_grid()) {
    const std::vector<float> taus = {static_cast<float>(tau)};
    Eigen::MatrixXf translated = translator::translate_batch(model, base, taus);
    const std::vector<retrieval::QueryResult> warped =
        index.knn_batch(translated, config.k, exclude, config.threads);

    std::vector<double> acc_t, acc_u, prec;
    acc_t.reserve(queries.size());
    acc_u.reserve(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const double translated_tempo = tau * truths[q];
      const std::vector<double> tempi_t = neighbor_tempi(warped[q]);
      const std::vector<double> tempi_u = neighbor_tempi(plain[q]);
      if (!tempi_t.empty())
        acc_t.push_back(
            metrics::neighbor_tempo_acc1(translated_tempo, tempi_t, config.k));
      if (!tempi_u.empty())
        acc_u.push_back(
            metrics::neighbor_tempo_acc1(translated_tempo, tempi_u, config.k));
      if (!query_tags[q]->empty()) {
        const std::vector<metrics::TagSet> tags = neighbor_tagsets(warped[q]);
        prec.push_back(metrics::neighbor_tag_precision(*query_tags[q], tags));
      }
    }

    io::CurveRow row;
    row.factor = tau;
    row.acc1_translated = mean_or_zero(acc_t);
    row.acc1_untranslated = mean_or_zero(acc_u);
    row.tag_precision = mean_or_zero(prec);
    report.curve.push_back(row);

    report.metrics.push_back(
        {"acc1_translated", row.factor, config.k, row.acc1_translated});
    report.metrics.push_back(
        {"acc1_untranslated", row.factor, config.k, row.acc1_untranslated});
    report.metrics.push_back(
        {"tag_precision", row.factor, config.k, row.tag_precision});
  }

  report.notes.emplace_back("queries", std::to_string(queries.size()));
  report.notes.emplace_back("tagged_queries", std::to_string(tagged_queries));
  report.notes.emplace_back("index_size", std::to_string(index.size()));
  return report;
}

// ---- contour retrieval --------------------------------------------------------

void ContourExperimentConfig::validate() const {
  retrieval::ContourConfig contour{c_count, static_cast<float>(delta), 1};
  contour.validate();
  if (precision_ks.empty() && retrieval_ks.empty())
    throw ConfigError("contour experiment: no k values requested");
  for (int k : precision_ks)
    if (k < 1) throw ConfigError("contour experiment: precision k >= 1");
  for (int k : retrieval_ks)
    if (k < 1) throw ConfigError("contour experiment: retrieval k >= 1");
  for (double s : gaussian_sigmas)
    if (!(s >= 0.0)) throw ConfigError("contour experiment: sigma >= 0");
  if (max_queries < 0) throw ConfigError("contour experiment: max_queries >= 0");
  if (threads < 1) throw ConfigError("contour experiment: threads >= 1");
}

std::string ContourExperimentConfig::to_json() const {
  ordered_json j;
  j["c_count"] = c_count;
  j["delta"] = delta;
  j["precision_ks"] = precision_ks;
  j["retrieval_ks"] = retrieval_ks;
  j["gaussian_sigmas"] = gaussian_sigmas;
  j["max_queries"] = max_queries;
  j["threads"] = threads;
  j["seed"] = seed;
  j["metric"] = metric == retrieval::Metric::Cosine ? "cosine" : "euclidean";
  return j.dump();
}

ContourExperimentConfig ContourExperimentConfig::from_json(const std::string& text) {
  json j = parse_config_json(text, "contour experiment config");
  ContourExperimentConfig config;
  config.c_count = j.value("c_count", config.c_count);
  config.delta = j.value("delta", config.delta);
  config.precision_ks = j.value("precision_ks", config.precision_ks);
  config.retrieval_ks = j.value("retrieval_ks", config.retrieval_ks);
  config.gaussian_sigmas = j.value("gaussian_sigmas", config.gaussian_sigmas);
  config.max_queries = j.value("max_queries", config.max_queries);
  config.threads = j.value("threads", config.threads);
  config.seed = j.value("seed", config.seed);
  const std::string metric = j.value("metric", "cosine");
  if (metric != "cosine" && metric != "euclidean")
    throw ConfigError("contour experiment: unknown metric '" + metric + "'");
  config.metric = metric == "cosine" ? retrieval::Metric::Cosine
                                     : retrieval::Metric::Euclidean;
  config.validate();
  return config;
}

std::vector<std::string> contour_method_names(
    const ContourExperimentConfig& config) {
  std::vector<std::string> names = {"single_point", "tempo_contour"};
  for (double sigma : config.gaussian_sigmas) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "gaussian_%.2g", sigma);
    names.emplace_back(buf);
  }
  names.emplace_back("linear_interp");
  return names;
}

io::ExperimentReport run_contour_experiment(
    const encoder::EmbeddingStore& store,
    const translator::TranslatorModel& model,
    const ContourExperimentConfig& config) {
  config.validate();
  model.validate();
  if (store.dim != model.embedding_dim)
    throw DataError("contour experiment: store dim does not match translator dim");

  const std::vector<std::size_t> queries =
      pick_queries(tagged_indices(store), config.max_queries, config.seed);
  if (queries.empty())
    throw DataError("contour experiment: store has no tagged records");

  retrieval::VectorIndex index = retrieval::VectorIndex::build(store, config.metric);

  int k_max = 1;
  for (int k : config.precision_ks) k_max = std::max(k_max, k);
  for (int k : config.retrieval_ks) k_max = std::max(k_max, k);

  const int point_count = 2 * config.c_count + 1;
  const float tau_lo =
      1.0f - static_cast<float>(config.c_count * config.delta);
  const float tau_hi =
      1.0f + static_cast<float>(config.c_count * config.delta);
  const retrieval::ContourConfig contour_cfg{
      config.c_count, static_cast<float>(config.delta), k_max};

  const std::vector<std::string> methods = contour_method_names(config);

  io::ExperimentReport report;
  report.experiment = "contour_retrieval";
  report.config_json = config.to_json();
  report.seed = config.seed;

  for (std::size_t m = 0; m < methods.size(); ++m) {
    const std::string& method = methods[m];
    std::vector<retrieval::QueryResult> results(queries.size());

    parallel_for(static_cast<int>(queries.size()), config.threads, [&](int qi) {
      const auto& rec = store.records[queries[static_cast<std::size_t>(qi)]];
      const Eigen::VectorXf& z = rec.track_embedding;
      const std::optional<std::string> self = rec.track_id;
      retrieval::QueryResult res;
      if (method == "single_point") {
        res = index.knn(z, k_max, self);
      } else if (method == "tempo_contour") {
        const auto points = retrieval::contour_points(model, z, contour_cfg);
        res = index.contour_knn(points, k_max, self);
      } else if (method == "linear_interp") {
        const Eigen::VectorXf a =
            translator::translate(model, z, dsp::StretchFactor(tau_lo));
        const Eigen::VectorXf b =
            translator::translate(model, z, dsp::StretchFactor(tau_hi));
        const auto points = retrieval::linear_interp_points(a, b, point_count);
        res = index.contour_knn(points, k_max, self);
      } else {
        // gaussian_<sigma>: per-query child stream keyed on the query index
        // so the draw is independent of threading and method order.
        const float sigma = static_cast<float>(config.gaussian_sigmas[m - 2]);
        Rng rng(config.seed ^ (0x9e3779b97f4a7c15ull *
                               (static_cast<std::uint64_t>(qi) + 1 + m)));
        const auto points =
            retrieval::gaussian_cluster_points(z, sigma, point_count, rng);
        res = index.contour_knn(points, k_max, self);
      }
      results[static_cast<std::size_t>(qi)] = std::move(res);
    });

    auto tagsets_prefix = [&](const retrieval::QueryResult& result, int k) {
      std::vector<metrics::TagSet> tags;
      const int n = std::min<int>(k, static_cast<int>(result.neighbors.size()));
      tags.reserve(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        const auto* rec = store.find(result.neighbors[i].track_id);
        tags.push_back(rec ? rec->tags : metrics::TagSet{});
      }
      return tags;
    };

    for (int k : config.precision_ks) {
      std::vector<double> scores;
      scores.reserve(queries.size());
      for (std::size_t q = 0; q < queries.size(); ++q) {
        const auto& rec = store.records[queries[q]];
        scores.push_back(metrics::neighbor_tag_precision(
            rec.tags, tagsets_prefix(results[q], k)));
      }
      report.metrics.push_back(
          {"tag_precision/" + method, std::nullopt, k, metrics::mean(scores)});
    }
    for (int k : config.retrieval_ks) {
      std::vector<double> scores;
      scores.reserve(queries.size());
      for (std::size_t q = 0; q < queries.size(); ++q) {
        const auto& rec = store.records[queries[q]];
        scores.push_back(metrics::tag_retrieval_hit(
                             rec.tags, tagsets_prefix(results[q], k))
                             ? 1.0
                             : 0.0);
      }
      report.metrics.push_back(
          {"tag_retrieval/" + method, std::nullopt, k, metrics::mean(scores)});
    }
  }

  report.notes.emplace_back("queries", std::to_string(queries.size()));
  report.notes.emplace_back("index_size", std::to_string(index.size()));
  report.notes.emplace_back(
      "reference_tag_precision_k2_4_8",
      "published reference: single-point 44.1/40.1/36.3, tempo-contour "
      "49.4/45.3/40.8, gaussian(0.1) 44.0/40.1/36.3, gaussian(0.5) "
      "42.5/38.6/34.9, linear-interp 44.3/40.4/35.5");
  report.notes.emplace_back(
      "reference_tag_retrieval_k1_2_4_8",
      "published reference: single-point 47.6/59.7/71.0/80.7, tempo-contour "
      "52.8/65.6/77.2/86.0, gaussian(0.1) 47.6/59.6/70.9/80.7, gaussian(0.5) "
      "45.4/57.7/69.4/79.6, linear-interp 44.8/61.7/75.0/84.2");
  return report;
}

// ---- probe augmentation sweep ---------------------------------------------------

void ProbeExperimentConfig::validate() const {
  if (strategies.empty())
    throw ConfigError("probe experiment: no strategies requested");
  for (const auto& s : strategies) s.validate();
  train.validate();
  if (threads < 1) throw ConfigError("probe experiment: threads >= 1");
}

std::string ProbeExperimentConfig::to_json() const {
  ordered_json j;
  ordered_json strat = ordered_json::array();
  for (const auto& s : strategies) {
    ordered_json rec;
    rec["name"] = s.name();
    rec["dropout_p"] = s.dropout_p;
    rec["sigma"] = s.sigma;
    strat.push_back(std::move(rec));
  }
  j["strategies"] = std::move(strat);
  j["batch_size"] = train.batch_size;
  j["total_steps"] = train.total_steps;
  j["peak_lr"] = train.peak_lr;
  j["warmup_steps"] = train.warmup_steps;
  j["tau_min"] = train.tau_min;
  j["tau_max"] = train.tau_max;
  j["seed"] = train.seed;
  j["hidden_width"] = train.hidden_width;
  j["dropout_rate"] = train.dropout_rate;
  j["threads"] = threads;
  return j.dump();
}

ProbeExperimentConfig ProbeExperimentConfig::from_json(const std::string& text) {
  json j = parse_config_json(text, "probe experiment config");
  ProbeExperimentConfig config;
  if (j.contains("strategies")) {
    config.strategies.clear();
    for (const auto& rec : j.at("strategies")) {
      probe::AugmentStrategy s =
          probe::AugmentStrategy::parse(rec.at("name").get<std::string>());
      s.dropout_p = rec.value("dropout_p", s.dropout_p);
      s.sigma = rec.value("sigma", s.sigma);
      config.strategies.push_back(s);
    }
  }
  config.train.batch_size = j.value("batch_size", config.train.batch_size);
  config.train.total_steps = j.value("total_steps", config.train.total_steps);
  config.train.peak_lr = j.value("peak_lr", config.train.peak_lr);
  config.train.warmup_steps = j.value("warmup_steps", config.train.warmup_steps);
  config.train.tau_min = j.value("tau_min", config.train.tau_min);
  config.train.tau_max = j.value("tau_max", config.train.tau_max);
  config.train.seed = j.value("seed", config.train.seed);
  config.train.hidden_width = j.value("hidden_width", config.train.hidden_width);
  config.train.dropout_rate = j.value("dropout_rate", config.train.dropout_rate);
  config.threads = j.value("threads", config.threads);
  config.validate();
  return config;
}

io::ExperimentReport run_probe_experiment(
    const encoder::EmbeddingStore& train_store,
    const encoder::EmbeddingStore& eval_store,
    const translator::TranslatorModel* translator_model,
    probe::StretchEncodeProvider* stretch_encoder,
    const ProbeExperimentConfig& config) {
  config.validate();
  if (train_store.dim != eval_store.dim)
    throw DataError("probe experiment: train/eval stores disagree on dim");

  probe::AugmentContext ctx;
  ctx.translator = translator_model;
  ctx.stretch_encoder = stretch_encoder;
  ctx.tau_min = config.train.tau_min;
  ctx.tau_max = config.train.tau_max;

  io::ExperimentReport report;
  report.experiment = "probe_augmentation";
  report.config_json = config.to_json();
  report.seed = config.train.seed;

  for (const auto& strategy : config.strategies) {
    probe::ProbeTrainResult trained =
        probe::train_probe(train_store, strategy, config.train, ctx);
    probe::ProbeEvalResult eval =
        probe::eval_probe(trained.model, eval_store, config.threads);
    report.metrics.push_back(
        {"acc1/" + strategy.name(), std::nullopt, std::nullopt, eval.acc1});
    report.metrics.push_back(
        {"acc2/" + strategy.name(), std::nullopt, std::nullopt, eval.acc2});
  }

  report.notes.emplace_back("train_tracks", std::to_string(train_store.size()));
  report.notes.emplace_back("eval_tracks", std::to_string(eval_store.size()));
  report.notes.emplace_back(
      "reference_acc1_acc2",
      "published reference (one eval set): none 74.1/90.5, mel 77.7/91.6, "
      "translation 77.7/92.1, dropout 74.3/90.7, gaussian 74.4/90.5, "
      "dropout+gaussian 75.3/90.7");
  return report;
}

// ---- bench -----------------------------------------------------------------------

void BenchConfig::validate() const {
  if (embedding_dim < 1 || hidden_width < 1)
    throw ConfigError("bench: dims must be >= 1");
  if (batch < 1 || reps < 1 || batches_per_rep < 1)
    throw ConfigError("bench: batch/reps must be >= 1");
  if (thread_counts.empty()) throw ConfigError("bench: need thread counts");
  for (int t : thread_counts)
    if (t < 1) throw ConfigError("bench: thread counts must be >= 1");
  if (index_size < 1 || knn_queries < 1 || knn_k < 1)
    throw ConfigError("bench: retrieval probe sizes must be >= 1");
}

std::string BenchConfig::to_json() const {
  ordered_json j;
  j["embedding_dim"] = embedding_dim;
  j["hidden_width"] = hidden_width;
  j["batch"] = batch;
  j["reps"] = reps;
  j["batches_per_rep"] = batches_per_rep;
  j["thread_counts"] = thread_counts;
  j["index_size"] = index_size;
  j["knn_queries"] = knn_queries;
  j["knn_k"] = knn_k;
  j["seed"] = seed;
  return j.dump();
}

io::ExperimentReport run_bench(const BenchConfig& config) {
  config.validate();
  Rng rng(config.seed);
  translator::TranslatorModel model = translator::make_translator(
      config.embedding_dim, config.hidden_width, rng);
  return run_bench(model, config);
}

io::ExperimentReport run_bench(const translator::TranslatorModel& model,
                               const BenchConfig& config) {
  config.validate();
  model.validate();
  using clock = std::chrono::steady_clock;

  Rng rng(config.seed + 1);
  Eigen::MatrixXf batch(config.batch, model.embedding_dim);
  for (Eigen::Index i = 0; i < batch.rows(); ++i)
    for (Eigen::Index j = 0; j < batch.cols(); ++j)
      batch(i, j) = static_cast<float>(rng.normal());
  const std::vector<float> taus = {1.25f};

  io::ExperimentReport report;
  report.experiment = "bench";
  report.config_json = config.to_json();
  report.seed = config.seed;

  // Warm up caches and Eigen's internal buffers before timing.
  volatile float sink =
      translator::translate_batch(model, batch, taus).sum();

  std::vector<double> per_rep_ms(config.reps);
  for (int rep = 0; rep < config.reps; ++rep) {
    const auto start = clock::now();
    for (int it = 0; it < config.batches_per_rep; ++it)
      sink = translator::translate_batch(model, batch, taus).sum();
    const auto stop = clock::now();
    per_rep_ms[rep] =
        std::chrono::duration<double, std::milli>(stop - start).count() /
        config.batches_per_rep;
  }
  (void)sink;

  std::vector<double> sorted = per_rep_ms;
  std::sort(sorted.begin(), sorted.end());
  const double median_ms = sorted[sorted.size() / 2];
  const double throughput = 1000.0 * config.batch / median_ms;
  const double spread =
      (sorted.back() - sorted.front()) / std::max(sorted.front(), 1e-12);

  report.metrics.push_back({"translate_ms_per_batch", std::nullopt,
                            std::nullopt, median_ms});
  report.metrics.push_back({"translate_embeddings_per_s", std::nullopt,
                            std::nullopt, throughput});
  report.metrics.push_back({"translate_rep_spread", std::nullopt, std::nullopt,
                            spread});
  for (int i = 0; i < config.reps; ++i)
    report.metrics.push_back({"translate_ms_per_batch_rep" + std::to_string(i),
                              std::nullopt, std::nullopt, per_rep_ms[i]});

  // Thread-scaling probe: shard one large batch across worker threads.
  for (int threads : config.thread_counts) {
    const int shards = threads;
    std::vector<Eigen::MatrixXf> outs(shards);
    const auto start = clock::now();
    for (int it = 0; it < config.batches_per_rep; ++it) {
      parallel_for(shards, threads, [&](int s) {
        outs[s] = translator::translate_batch(model, batch, taus);
      });
    }
    const auto stop = clock::now();
    const double ms =
        std::chrono::duration<double, std::milli>(stop - start).count();
    const double scaled =
        1000.0 * config.batch * shards * config.batches_per_rep / ms;
    report.metrics.push_back({"translate_embeddings_per_s_t" +
                                  std::to_string(threads),
                              std::nullopt, std::nullopt, scaled});
  }

  // Retrieval latency probe on a random index.
  {
    std::vector<std::string> ids(config.index_size);
    Eigen::MatrixXf entries(config.index_size, model.embedding_dim);
    for (int i = 0; i < config.index_size; ++i) {
      ids[i] = "bench" + std::to_string(i);
      for (Eigen::Index j = 0; j < entries.cols(); ++j)
        entries(i, j) = static_cast<float>(rng.normal());
    }
    retrieval::VectorIndex index = retrieval::VectorIndex::build(
        std::move(ids), entries, retrieval::Metric::Cosine);
    const auto start = clock::now();
    for (int q = 0; q < config.knn_queries; ++q) {
      retrieval::QueryResult res =
          index.knn(entries.row(q % config.index_size).transpose(), config.knn_k);
      if (res.neighbors.empty()) throw DataError("bench: empty knn result");
    }
    const auto stop = clock::now();
    const double ms_per_query =
        std::chrono::duration<double, std::milli>(stop - start).count() /
        config.knn_queries;
    report.metrics.push_back(
        {"knn_ms_per_query", std::nullopt, std::nullopt, ms_per_query});
  }

  report.notes.emplace_back("batch", std::to_string(config.batch));
  report.notes.emplace_back("hidden_width", std::to_string(config.hidden_width));
  report.notes.emplace_back("embedding_dim", std::to_string(config.embedding_dim));
  return report;
}

double report_value(const io::ExperimentReport& report, const std::string& name,
                    std::optional<double> tau, std::optional<int> k) {
  for (const auto& m : report.metrics) {
    if (m.name != name) continue;
    if (tau && (!m.tau || std::abs(*m.tau - *tau) > 1e-9)) continue;
    if (k && (!m.k || *m.k != *k)) continue;
    return m.value;
  }
  throw DataError("report has no metric named '" + name + "'");
}

}  // namespace tempowarp::experiments
