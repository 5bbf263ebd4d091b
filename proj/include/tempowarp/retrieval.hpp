#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tempowarp/common.hpp"
#include "tempowarp/encoder.hpp"
#include "tempowarp/translator.hpp"

namespace tempowarp::retrieval {

using encoder::Embedding;

enum class Metric : std::uint8_t { Cosine = 0, Euclidean = 1 };

struct Neighbor {
  std::string track_id;
  float distance = 0.0f;
};

struct QueryResult {
  std::vector<Neighbor> neighbors;  // ascending distance, ids unique
  std::optional<std::string> query_id;
  bool truncated = false;  // fewer than k candidates existed
};

/// Tempo-contour query shape: 2C+1 stretch factors 1 + c*delta, c in [-C, C].
struct ContourConfig {
  int c_count = 10;     // C
  float delta = 0.05f;  // ratio increment
  int k = 5;

  void validate() const;  // C >= 0, delta > 0, 1 - C*delta > 0, k >= 1
  int point_count() const { return 2 * c_count + 1; }
};

/// Exact brute-force nearest-neighbor index over track embeddings.
/// Immutable after build; all queries are pure and thread-safe.
class VectorIndex {
 public:
  static VectorIndex build(const encoder::EmbeddingStore& store, Metric metric);

  /// Index over bare (id, embedding) rows; embeddings one per row.
  static VectorIndex build(std::vector<std::string> ids,
                           const Eigen::MatrixXf& embeddings, Metric metric);

  /// Exact top-k by metric, ties broken by ascending track_id. If k exceeds
  /// the candidate count the result holds everything and is flagged
  /// truncated. exclude_id drops at most that one entry.
  QueryResult knn(const Embedding& query, int k,
                  const std::optional<std::string>& exclude_id = {}) const;

  /// Min-distance-to-any-point query: per point take its k nearest, merge by
  /// id keeping each id's minimum distance, re-rank, return top k.
  QueryResult contour_knn(std::span<const Embedding> points, int k,
                          const std::optional<std::string>& exclude_id = {}) const;

  /// Batched point queries sharded with parallel_for; output order and
  /// contents are identical to calling knn per row serially.
  std::vector<QueryResult> knn_batch(const Eigen::MatrixXf& queries, int k,
                                     std::span<const std::string> exclude_ids,
                                     int threads) const;

  std::size_t size() const { return ids_.size(); }
  Metric metric() const { return metric_; }
  int dim() const { return static_cast<int>(embeddings_.cols()); }
  const std::vector<std::string>& ids() const { return ids_; }

 private:
  VectorIndex() = default;

  /// Distances from one query to every entry.
  Eigen::VectorXf distances_to_all(const Embedding& query) const;
  QueryResult top_k_from_distances(const Eigen::VectorXf& dist, int k,
                                   const std::optional<std::string>& exclude_id) const;

  std::vector<std::string> ids_;
  Eigen::MatrixXf embeddings_;      // one entry per row
  Eigen::MatrixXf unit_embeddings_; // row-normalized copy (cosine metric)
  Eigen::VectorXf sq_norms_;        // per-row squared norms (euclidean metric)
  Metric metric_ = Metric::Cosine;
};

/// The tempo contour of z: translate(z, 1 + c*delta) for c = -C..C in order.
std::vector<Embedding> contour_points(const translator::TranslatorModel& model,
                                      const Embedding& z,
                                      const ContourConfig& config);

/// Baseline query cloud: count copies of z plus isotropic N(0, sigma^2 I).
std::vector<Embedding> gaussian_cluster_points(const Embedding& z, float sigma,
                                               int count, Rng& rng);

/// Baseline query segment: count points evenly spaced from a to b inclusive.
std::vector<Embedding> linear_interp_points(const Embedding& a,
                                            const Embedding& b, int count);

}  // namespace tempowarp::retrieval
