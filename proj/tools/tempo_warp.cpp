// tempo-warp: command-line front end for the tempo translation toolkit.
//
// Subcommands cover the full workflow: synthetic dataset generation,
// translator and probe training, probe evaluation, point/contour queries,
// the three evaluation experiments, and a latency benchmark. Exit codes:
// 0 success, 2 configuration error, 3 data error, 4 numeric divergence.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tempowarp/common.hpp"
#include "tempowarp/experiments.hpp"
#include "tempowarp/io.hpp"
#include "tempowarp/metrics.hpp"
#include "tempowarp/probe.hpp"
#include "tempowarp/retrieval.hpp"
#include "tempowarp/translator.hpp"

namespace tw = tempowarp;

namespace {

struct GlobalFlags {
  std::uint64_t seed = 0;
  int threads = tw::default_thread_count();
  std::string out_dir = ".";
  std::string format = "json";
};

std::filesystem::path report_path(const GlobalFlags& global,
                                  const std::string& stem) {
  std::filesystem::create_directories(global.out_dir);
  return std::filesystem::path(global.out_dir) /
         (stem + (global.format == "csv" ? ".csv" : ".json"));
}

void write_report(const tw::io::ExperimentReport& report,
                  const GlobalFlags& global, const std::string& stem) {
  const auto path = report_path(global, stem);
  tw::io::emit_report(report, path, tw::io::parse_report_format(global.format));
  std::cout << "wrote " << path.string() << "\n";
}

void print_warnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

// Shared synthetic-universe flags (dataset generation and oracle-backed
// training must agree on these to live in the same embedding space).
void add_synthetic_flags(CLI::App* cmd, tw::experiments::SyntheticSpec& spec) {
  cmd->add_option("--tracks", spec.tracks, "number of synthetic tracks");
  cmd->add_option("--dim", spec.dim, "embedding dimensionality");
  cmd->add_option("--styles", spec.styles, "number of style clusters");
  cmd->add_option("--tags-per-style", spec.tags_per_style,
                  "tags carried by each style cluster");
  cmd->add_option("--tempo-min", spec.tempo_min, "lowest tempo (BPM)");
  cmd->add_option("--tempo-max", spec.tempo_max, "highest tempo (BPM)");
  cmd->add_option("--noise-sigma", spec.noise_sigma,
                  "additive embedding noise std");
  cmd->add_option("--style-dim", spec.style_dim, "style vector dimensionality");
  cmd->add_option("--oracle-hidden", spec.oracle_hidden,
                  "oracle hidden layer width");
  cmd->add_option("--oracle-seed", spec.oracle_seed,
                  "oracle weight seed (defines the embedding universe)");
}

void add_translator_train_flags(CLI::App* cmd,
                                tw::translator::TranslatorTrainConfig& config) {
  cmd->add_option("--steps", config.total_steps, "optimizer steps");
  cmd->add_option("--batch", config.batch_size, "batch size");
  cmd->add_option("--peak-lr", config.peak_lr, "peak learning rate");
  cmd->add_option("--warmup", config.warmup_steps, "warmup steps");
  cmd->add_option("--tau-min", config.tau_min, "stretch factor lower bound");
  cmd->add_option("--tau-max", config.tau_max, "stretch factor upper bound");
  cmd->add_option("--hidden-width", config.hidden_width,
                  "translator hidden width");
}

int run(int argc, char** argv) {
  CLI::App app{"tempo translation toolkit"};
  app.require_subcommand(1);

  GlobalFlags global;
  app.add_option("--seed", global.seed, "base random seed")
      ->envname("TEMPO_WARP_SEED");
  app.add_option("--threads", global.threads, "worker thread cap")
      ->check(CLI::PositiveNumber);
  app.add_option("--out-dir", global.out_dir, "directory for report files");
  app.add_option("--format", global.format, "report format")
      ->check(CLI::IsMember({"json", "csv"}));

  // ---- gen-synthetic ----
  auto* gen = app.add_subcommand("gen-synthetic",
                                 "generate a synthetic labeled embedding store");
  tw::experiments::SyntheticSpec gen_spec;
  std::string gen_out = "synthetic.embs";
  add_synthetic_flags(gen, gen_spec);
  gen->add_option("--out", gen_out, "output store path")->required();
  gen->callback([&] {
    gen_spec.seed = global.seed;
    tw::encoder::SyntheticDataset dataset = tw::experiments::make_dataset(gen_spec);
    tw::io::write_store(gen_out, dataset.store);
    std::cout << "wrote " << gen_out << " (" << dataset.store.size()
              << " tracks, dim " << dataset.store.dim << ")\n";
  });

  // ---- train-translator ----
  auto* tt = app.add_subcommand("train-translator",
                                "train the tempo translation function");
  tw::experiments::SyntheticSpec tt_spec;
  tw::translator::TranslatorTrainConfig tt_config;
  tt_config.total_steps = 20000;  // desk-scale default
  tt_config.hidden_width = 512;
  std::string tt_out = "translator.mdlc";
  std::string tt_tau_encoding = "log2";
  add_synthetic_flags(tt, tt_spec);
  add_translator_train_flags(tt, tt_config);
  tt->add_option("--tau-encoding", tt_tau_encoding, "stretch factor encoding")
      ->check(CLI::IsMember({"log2", "linear"}));
  tt->add_option("--out", tt_out, "output checkpoint path")->required();
  tt->callback([&] {
    tt_config.seed = global.seed;
    tt_config.tau_encoding = tt_tau_encoding == "log2"
                                 ? tw::translator::TauEncoding::Log2
                                 : tw::translator::TauEncoding::Linear;
    tw::translator::OracleTripleSource source(
        tt_spec.oracle_config(), static_cast<float>(tt_spec.tempo_min),
        static_cast<float>(tt_spec.tempo_max));
    tw::translator::TrainResult trained =
        tw::translator::train_translator(source, tt_config);
    const std::size_t n = trained.loss_history.size();
    const std::size_t tail = std::min<std::size_t>(1000, n);
    double tail_mean = 0.0;
    for (std::size_t i = n - tail; i < n; ++i) tail_mean += trained.loss_history[i];
    tail_mean /= static_cast<double>(tail);
    tw::io::save_translator(tt_out, trained.model, tt_spec.to_json());
    std::cout << "wrote " << tt_out << " (final-1k mean loss " << tail_mean
              << ")\n";
  });

  // ---- train-probe ----
  auto* tp = app.add_subcommand("train-probe", "train a tempo-class probe");
  std::string tp_store, tp_translator, tp_out = "probe.mdlc";
  std::string tp_augment = "none";
  tw::probe::ProbeTrainConfig tp_config;
  tp->add_option("--store", tp_store, "training store (.embs)")->required();
  tp->add_option("--augment", tp_augment,
                 "augmentation strategy "
                 "(none|translation|dropout|gaussian|dropout+gaussian; mel "
                 "needs a stretch-encode source and runs only inside "
                 "exp-probe's synthetic mode)");
  tp->add_option("--translator", tp_translator,
                 "translator checkpoint (translation strategy)");
  tp->add_option("--steps", tp_config.total_steps, "optimizer steps");
  tp->add_option("--batch", tp_config.batch_size, "batch size");
  tp->add_option("--peak-lr", tp_config.peak_lr, "peak learning rate");
  tp->add_option("--warmup", tp_config.warmup_steps, "warmup steps");
  tp->add_option("--tau-min", tp_config.tau_min, "augmentation stretch lower bound");
  tp->add_option("--tau-max", tp_config.tau_max, "augmentation stretch upper bound");
  tp->add_option("--hidden-width", tp_config.hidden_width, "probe hidden width");
  tp->add_option("--dropout-rate", tp_config.dropout_rate,
                 "hidden-layer dropout rate");
  tp->add_option("--out", tp_out, "output checkpoint path")->required();
  tp->callback([&] {
    tp_config.seed = global.seed;
    tw::probe::AugmentStrategy strategy = tw::probe::AugmentStrategy::parse(tp_augment);
    if (strategy.kind == tw::probe::AugmentKind::Mel)
      throw tw::ConfigError(
          "train-probe: the mel strategy needs a stretch-encode source; use "
          "exp-probe's synthetic mode");
    tw::encoder::EmbeddingStore store = tw::io::read_store(tp_store);
    tw::probe::AugmentContext ctx;
    std::optional<tw::translator::TranslatorModel> model;
    if (strategy.kind == tw::probe::AugmentKind::Translation) {
      if (tp_translator.empty())
        throw tw::ConfigError("train-probe: --translator is required for the "
                              "translation strategy");
      std::vector<std::string> warnings;
      model = tw::io::load_translator(tp_translator, &warnings);
      print_warnings(warnings);
      ctx.translator = &*model;
    }
    tw::probe::ProbeTrainResult trained =
        tw::probe::train_probe(store, strategy, tp_config, ctx);
    nlohmann::ordered_json echo;
    echo["augment"] = strategy.name();
    echo["store"] = tp_store;
    echo["seed"] = tp_config.seed;
    echo["steps"] = tp_config.total_steps;
    tw::io::save_probe(tp_out, trained.model, echo.dump());
    std::cout << "wrote " << tp_out << "\n";
  });

  // ---- eval-probe ----
  auto* ep = app.add_subcommand("eval-probe", "evaluate a probe checkpoint");
  std::string ep_model, ep_store;
  ep->add_option("--model", ep_model, "probe checkpoint")->required();
  ep->add_option("--store", ep_store, "evaluation store (.embs)")->required();
  ep->callback([&] {
    std::vector<std::string> warnings;
    tw::probe::ProbeModel model = tw::io::load_probe(ep_model, &warnings);
    print_warnings(warnings);
    tw::encoder::EmbeddingStore store = tw::io::read_store(ep_store);
    tw::probe::ProbeEvalResult eval =
        tw::probe::eval_probe(model, store, global.threads);
    tw::io::ExperimentReport report;
    report.experiment = "probe_eval";
    nlohmann::ordered_json echo;
    echo["model"] = ep_model;
    echo["store"] = ep_store;
    report.config_json = echo.dump();
    report.seed = global.seed;
    report.metrics.push_back({"acc1", std::nullopt, std::nullopt, eval.acc1});
    report.metrics.push_back({"acc2", std::nullopt, std::nullopt, eval.acc2});
    report.metrics.push_back({"evaluated", std::nullopt, std::nullopt,
                              static_cast<double>(eval.evaluated)});
    report.metrics.push_back({"skipped", std::nullopt, std::nullopt,
                              static_cast<double>(eval.skipped)});
    write_report(report, global, "probe_eval");
    std::printf("acc1 = %.4f  acc2 = %.4f  (%d tracks)\n", eval.acc1, eval.acc2,
                eval.evaluated);
  });

  // ---- query ----
  auto* qu = app.add_subcommand("query", "k-nearest-neighbor lookup");
  std::string qu_index, qu_track, qu_translator, qu_metric = "cosine";
  std::string qu_contour;
  double qu_tau = 0.0, qu_gaussian = -1.0;
  bool qu_interp = false;
  int qu_k = 5, qu_c = 10;
  double qu_delta = 0.05;
  qu->add_option("--index", qu_index, "store to search (.embs)")->required();
  qu->add_option("--track", qu_track, "query track id")->required();
  qu->add_option("-k,--k", qu_k, "neighbor count");
  qu->add_option("--metric", qu_metric, "distance metric")
      ->check(CLI::IsMember({"cosine", "euclidean"}));
  qu->add_option("--translator", qu_translator,
                 "translator checkpoint (tau/contour/interp queries)");
  qu->add_option("--tau", qu_tau, "translate the query by this stretch factor");
  qu->add_option("--contour", qu_contour, "contour query as C,delta (e.g. 10,0.05)");
  qu->add_option("--gaussian", qu_gaussian, "gaussian-cloud query with this sigma");
  qu->add_flag("--interp", qu_interp, "linear-interp query between contour ends");
  qu->add_option("--C", qu_c, "contour half-width for --interp");
  qu->add_option("--delta", qu_delta, "contour increment for --interp");
  qu->callback([&] {
    tw::encoder::EmbeddingStore store = tw::io::read_store(qu_index);
    const tw::encoder::TrackRecord* rec = store.find(qu_track);
    if (!rec) throw tw::DataError("query: track id '" + qu_track + "' not in store");
    tw::retrieval::VectorIndex index = tw::retrieval::VectorIndex::build(
        store, qu_metric == "cosine" ? tw::retrieval::Metric::Cosine
                                     : tw::retrieval::Metric::Euclidean);

    const int modes = (qu_tau > 0.0) + !qu_contour.empty() +
                      (qu_gaussian >= 0.0) + qu_interp;
    if (modes > 1)
      throw tw::ConfigError("query: --tau, --contour, --gaussian and --interp "
                            "are mutually exclusive");

    std::optional<tw::translator::TranslatorModel> model;
    auto need_translator = [&]() -> const tw::translator::TranslatorModel& {
      if (!model) {
        if (qu_translator.empty())
          throw tw::ConfigError("query: this query shape needs --translator");
        std::vector<std::string> warnings;
        model = tw::io::load_translator(qu_translator, &warnings);
        print_warnings(warnings);
      }
      return *model;
    };

    tw::retrieval::QueryResult result;
    const std::optional<std::string> self = qu_track;
    if (!qu_contour.empty()) {
      int c = 0;
      double delta = 0.0;
      if (std::sscanf(qu_contour.c_str(), "%d,%lf", &c, &delta) != 2)
        throw tw::ConfigError("query: --contour expects C,delta");
      tw::retrieval::ContourConfig cc{c, static_cast<float>(delta), qu_k};
      auto points =
          tw::retrieval::contour_points(need_translator(), rec->track_embedding, cc);
      result = index.contour_knn(points, qu_k, self);
    } else if (qu_gaussian >= 0.0) {
      tw::Rng rng(global.seed);
      auto points = tw::retrieval::gaussian_cluster_points(
          rec->track_embedding, static_cast<float>(qu_gaussian), 2 * qu_c + 1, rng);
      result = index.contour_knn(points, qu_k, self);
    } else if (qu_interp) {
      const auto& m = need_translator();
      const float lo = 1.0f - static_cast<float>(qu_c * qu_delta);
      const float hi = 1.0f + static_cast<float>(qu_c * qu_delta);
      auto a = tw::translator::translate(m, rec->track_embedding,
                                         tw::dsp::StretchFactor(lo));
      auto b = tw::translator::translate(m, rec->track_embedding,
                                         tw::dsp::StretchFactor(hi));
      auto points = tw::retrieval::linear_interp_points(a, b, 2 * qu_c + 1);
      result = index.contour_knn(points, qu_k, self);
    } else if (qu_tau > 0.0) {
      auto z = tw::translator::translate(need_translator(), rec->track_embedding,
                                         tw::dsp::StretchFactor(
                                             static_cast<float>(qu_tau)));
      result = index.knn(z, qu_k, self);
    } else {
      result = index.knn(rec->track_embedding, qu_k, self);
    }

    std::printf("rank\ttrack_id\tdistance\ttempo\ttags\n");
    for (std::size_t r = 0; r < result.neighbors.size(); ++r) {
      const auto& n = result.neighbors[r];
      const auto* nr = store.find(n.track_id);
      std::string tempo = "-";
      std::string tags;
      if (nr && nr->tempo_bpm) tempo = std::to_string(*nr->tempo_bpm);
      if (nr)
        for (std::size_t t = 0; t < nr->tags.size(); ++t)
          tags += (t ? ";" : "") + nr->tags[t];
      std::printf("%zu\t%s\t%.6f\t%s\t%s\n", r + 1, n.track_id.c_str(),
                  n.distance, tempo.c_str(), tags.c_str());
    }
    if (result.truncated)
      std::cerr << "note: fewer than k candidates were available\n";
  });

  // ---- experiment commands share a synthetic-or-files source ----
  struct ExpSource {
    tw::experiments::SyntheticSpec spec;
    bool synthetic = false;
    std::string store_path, translator_path;
    tw::translator::TranslatorTrainConfig train;
  };
  auto add_exp_source = [&](CLI::App* cmd, ExpSource& src) {
    cmd->add_flag("--synthetic", src.synthetic,
                  "generate the dataset and train the translator in-process");
    add_synthetic_flags(cmd, src.spec);
    add_translator_train_flags(cmd, src.train);
    cmd->add_option("--store", src.store_path, "embedding store (.embs)");
    cmd->add_option("--translator", src.translator_path,
                    "translator checkpoint (.mdlc)");
  };
  auto resolve_source = [&](ExpSource& src)
      -> std::pair<tw::encoder::EmbeddingStore, tw::translator::TranslatorModel> {
    if (src.synthetic) {
      src.spec.seed = global.seed;
      src.train.seed = global.seed + 1;
      tw::encoder::SyntheticDataset dataset = tw::experiments::make_dataset(src.spec);
      tw::translator::OracleTripleSource source(
          src.spec.oracle_config(), static_cast<float>(src.spec.tempo_min),
          static_cast<float>(src.spec.tempo_max));
      tw::translator::TrainResult trained =
          tw::translator::train_translator(source, src.train);
      return {std::move(dataset.store), std::move(trained.model)};
    }
    if (src.store_path.empty() || src.translator_path.empty())
      throw tw::ConfigError(
          "experiment: pass --synthetic or both --store and --translator");
    std::vector<std::string> warnings;
    tw::translator::TranslatorModel model =
        tw::io::load_translator(src.translator_path, &warnings);
    print_warnings(warnings);
    return {tw::io::read_store(src.store_path), std::move(model)};
  };

  // ---- exp-tempo-retrieval ----
  auto* xr = app.add_subcommand("exp-tempo-retrieval",
                                "stretch-sweep retrieval experiment");
  ExpSource xr_src;
  xr_src.train.total_steps = 20000;
  xr_src.train.hidden_width = 512;
  tw::experiments::TempoRetrievalConfig xr_config;
  add_exp_source(xr, xr_src);
  xr->add_option("--tau-lo", xr_config.tau_lo, "sweep start");
  xr->add_option("--tau-hi", xr_config.tau_hi, "sweep end");
  xr->add_option("--tau-step", xr_config.tau_step, "sweep step");
  xr->add_option("-k,--k", xr_config.k, "neighbor count");
  xr->add_option("--max-queries", xr_config.max_queries,
                 "cap on query tracks (0 = all)");
  xr->callback([&] {
    auto [store, model] = resolve_source(xr_src);
    xr_config.threads = global.threads;
    xr_config.seed = global.seed;
    auto report = tw::experiments::run_tempo_retrieval_experiment(store, model,
                                                                  xr_config);
    write_report(report, global, "tempo_retrieval");
  });

  // ---- exp-contour ----
  auto* xc = app.add_subcommand("exp-contour",
                                "tempo-impartial retrieval experiment");
  ExpSource xc_src;
  xc_src.train.total_steps = 20000;
  xc_src.train.hidden_width = 512;
  tw::experiments::ContourExperimentConfig xc_config;
  add_exp_source(xc, xc_src);
  xc->add_option("--C", xc_config.c_count, "contour half-width");
  xc->add_option("--delta", xc_config.delta, "contour increment");
  xc->add_option("--max-queries", xc_config.max_queries,
                 "cap on query tracks (0 = all)");
  xc->callback([&] {
    auto [store, model] = resolve_source(xc_src);
    xc_config.threads = global.threads;
    xc_config.seed = global.seed;
    auto report = tw::experiments::run_contour_experiment(store, model, xc_config);
    write_report(report, global, "contour_retrieval");
  });

  // ---- exp-probe ----
  auto* xp = app.add_subcommand("exp-probe",
                                "augmentation-strategy probe experiment");
  ExpSource xp_src;
  xp_src.train.total_steps = 20000;
  xp_src.train.hidden_width = 512;
  tw::experiments::ProbeExperimentConfig xp_config;
  std::vector<std::string> xp_strategies;
  int xp_eval_tracks = 2000;
  std::string xp_eval_store;
  add_exp_source(xp, xp_src);
  xp->add_option("--strategies", xp_strategies,
                 "strategy names (default: all six in synthetic mode, all "
                 "but mel otherwise)");
  xp->add_option("--probe-steps", xp_config.train.total_steps, "probe steps");
  xp->add_option("--probe-peak-lr", xp_config.train.peak_lr, "probe peak lr");
  xp->add_option("--eval-tracks", xp_eval_tracks,
                 "synthetic mode: held-out eval store size");
  xp->add_option("--eval-store", xp_eval_store, "file mode: eval store path");
  xp->callback([&] {
    xp_config.threads = global.threads;
    xp_config.train.seed = global.seed + 2;
    if (!xp_strategies.empty()) {
      xp_config.strategies.clear();
      for (const auto& name : xp_strategies)
        xp_config.strategies.push_back(tw::probe::AugmentStrategy::parse(name));
    }
    if (xp_src.synthetic) {
      xp_src.spec.seed = global.seed;
      xp_src.train.seed = global.seed + 1;
      tw::encoder::SyntheticDataset train_ds =
          tw::experiments::make_dataset(xp_src.spec);
      tw::experiments::SyntheticSpec eval_spec = xp_src.spec;
      eval_spec.tracks = xp_eval_tracks;
      eval_spec.seed = global.seed + 17;
      tw::encoder::SyntheticDataset eval_ds =
          tw::experiments::make_dataset(eval_spec);
      tw::translator::OracleTripleSource source(
          xp_src.spec.oracle_config(), static_cast<float>(xp_src.spec.tempo_min),
          static_cast<float>(xp_src.spec.tempo_max));
      tw::translator::TrainResult trained =
          tw::translator::train_translator(source, xp_src.train);
      tw::probe::OracleStretchEncode stretch(train_ds);
      auto report = tw::experiments::run_probe_experiment(
          train_ds.store, eval_ds.store, &trained.model, &stretch, xp_config);
      write_report(report, global, "probe_augmentation");
      return;
    }
    if (xp_strategies.empty()) {
      xp_config.strategies.clear();
      for (const char* n : {"none", "translation", "dropout", "gaussian",
                            "dropout+gaussian"})
        xp_config.strategies.push_back(tw::probe::AugmentStrategy::parse(n));
    }
    if (xp_eval_store.empty())
      throw tw::ConfigError("exp-probe: file mode needs --eval-store");
    auto [store, model] = resolve_source(xp_src);
    tw::encoder::EmbeddingStore eval_store = tw::io::read_store(xp_eval_store);
    auto report = tw::experiments::run_probe_experiment(store, eval_store,
                                                        &model, nullptr,
                                                        xp_config);
    write_report(report, global, "probe_augmentation");
  });

  // ---- bench ----
  auto* be = app.add_subcommand("bench", "translate/retrieval latency benchmark");
  tw::experiments::BenchConfig be_config;
  std::string be_model;
  be->add_option("--dim", be_config.embedding_dim, "embedding dimensionality");
  be->add_option("--hidden-width", be_config.hidden_width, "translator width");
  be->add_option("--batch", be_config.batch, "batch size");
  be->add_option("--reps", be_config.reps, "timing repetitions");
  be->add_option("--model", be_model, "time this checkpoint instead");
  be->callback([&] {
    be_config.seed = global.seed;
    be_config.thread_counts.clear();
    for (int t = 1; t <= global.threads; t *= 2) be_config.thread_counts.push_back(t);
    tw::io::ExperimentReport report;
    if (!be_model.empty()) {
      std::vector<std::string> warnings;
      auto model = tw::io::load_translator(be_model, &warnings);
      print_warnings(warnings);
      be_config.embedding_dim = model.embedding_dim;
      be_config.hidden_width = model.hidden_width();
      report = tw::experiments::run_bench(model, be_config);
    } else {
      report = tw::experiments::run_bench(be_config);
    }
    write_report(report, global, "bench");
    std::printf("translate: %.1f embeddings/s (batch %d)\n",
                tw::experiments::report_value(report, "translate_embeddings_per_s"),
                be_config.batch);
  });

  CLI11_PARSE(app, argc, argv);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const tw::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const tw::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const tw::DivergenceError& e) {
    std::cerr << "divergence: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
