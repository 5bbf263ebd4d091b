#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tempowarp/common.hpp"
#include "tempowarp/encoder.hpp"
#include "tempowarp/io.hpp"
#include "tempowarp/probe.hpp"
#include "tempowarp/retrieval.hpp"
#include "tempowarp/translator.hpp"

namespace tempowarp::experiments {

/// Parameters of a synthetic oracle dataset draw. The same oracle settings
/// (dim, style_dim, hidden, oracle_seed) must be shared between a dataset
/// and any triple source or stretch-encode provider meant to live in the
/// same embedding universe.
struct SyntheticSpec {
  int tracks = 5000;
  int dim = 64;
  int styles = 40;
  int tags_per_style = 3;
  double tempo_min = 60.0;
  double tempo_max = 240.0;
  double noise_sigma = 0.0;
  int style_dim = 8;
  int oracle_hidden = 32;
  std::uint64_t oracle_seed = 7;
  std::uint64_t seed = 11;  // dataset draw

  encoder::OracleConfig oracle_config() const;
  void validate() const;
  std::string to_json() const;
  static SyntheticSpec from_json(const std::string& text);
};

encoder::SyntheticDataset make_dataset(const SyntheticSpec& spec);

/// Stretch-factor sweep: for every tau on the grid, every query embedding is
/// translated and its k nearest neighbors are scored against the translated
/// tempo tau*T; the untranslated embedding scored against the same labels is
/// the baseline curve.
struct TempoRetrievalConfig {
  double tau_lo = 0.5;
  double tau_hi = 2.0;
  double tau_step = 0.05;
  int k = 5;
  int max_queries = 0;  // 0 = every labeled track
  int threads = 1;
  std::uint64_t seed = 0;  // query subsampling
  retrieval::Metric metric = retrieval::Metric::Cosine;

  void validate() const;
  std::vector<double> tau_grid() const;
  std::string to_json() const;
  static TempoRetrievalConfig from_json(const std::string& text);
};

io::ExperimentReport run_tempo_retrieval_experiment(
    const encoder::EmbeddingStore& store,
    const translator::TranslatorModel& model, const TempoRetrievalConfig& config);

/// Tag-based retrieval with tempo-impartial query shapes: single point,
/// tempo contour, Gaussian clouds, and the linear-interpolation segment.
struct ContourExperimentConfig {
  int c_count = 10;
  double delta = 0.05;
  std::vector<int> precision_ks = {2, 4, 8};
  std::vector<int> retrieval_ks = {1, 2, 4, 8};
  std::vector<double> gaussian_sigmas = {0.1, 0.5};
  int max_queries = 0;
  int threads = 1;
  std::uint64_t seed = 0;  // query subsampling + gaussian clouds
  retrieval::Metric metric = retrieval::Metric::Cosine;

  void validate() const;
  std::string to_json() const;
  static ContourExperimentConfig from_json(const std::string& text);
};

/// Method labels used in contour-experiment metric names, in report order.
std::vector<std::string> contour_method_names(
    const ContourExperimentConfig& config);

io::ExperimentReport run_contour_experiment(
    const encoder::EmbeddingStore& store,
    const translator::TranslatorModel& model,
    const ContourExperimentConfig& config);

/// One probe per augmentation strategy, identical seeds, shared evaluation.
struct ProbeExperimentConfig {
  std::vector<probe::AugmentStrategy> strategies =
      probe::AugmentStrategy::standard_six();
  probe::ProbeTrainConfig train;
  int threads = 1;

  void validate() const;
  std::string to_json() const;
  static ProbeExperimentConfig from_json(const std::string& text);
};

io::ExperimentReport run_probe_experiment(
    const encoder::EmbeddingStore& train_store,
    const encoder::EmbeddingStore& eval_store,
    const translator::TranslatorModel* translator_model,
    probe::StretchEncodeProvider* stretch_encoder,
    const ProbeExperimentConfig& config);

/// Latency/throughput measurements. Wall-clock numbers are inherently not
/// seed-reproducible; this report is excluded from determinism checks.
struct BenchConfig {
  int embedding_dim = 64;
  int hidden_width = 2048;
  int batch = 128;
  int reps = 5;
  int batches_per_rep = 25;
  std::vector<int> thread_counts = {1};
  int index_size = 5000;
  int knn_queries = 200;
  int knn_k = 5;
  std::uint64_t seed = 0;

  void validate() const;
  std::string to_json() const;
};

io::ExperimentReport run_bench(const BenchConfig& config);
io::ExperimentReport run_bench(const translator::TranslatorModel& model,
                               const BenchConfig& config);

/// Pulls one metric value out of a report; throws DataError if absent.
double report_value(const io::ExperimentReport& report, const std::string& name,
                    std::optional<double> tau = {}, std::optional<int> k = {});

}  // namespace tempowarp::experiments
