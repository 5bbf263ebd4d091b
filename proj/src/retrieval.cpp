#include "tempowarp/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

namespace tempowarp::retrieval {

void ContourConfig::validate() const {
  if (c_count < 0) throw ConfigError("contour: C must be >= 0");
  if (!(delta > 0.0f)) throw ConfigError("contour: delta must be > 0");
  if (!(1.0f - static_cast<float>(c_count) * delta > 0.0f))
    throw ConfigError("contour: smallest factor 1 - C*delta must stay positive");
  if (k < 1) throw ConfigError("contour: k must be >= 1");
}

VectorIndex VectorIndex::build(const encoder::EmbeddingStore& store,
                               Metric metric) {
  if (store.records.empty()) throw DataError("index build: empty store");
  store.validate();
  std::vector<std::string> ids;
  ids.reserve(store.size());
  Eigen::MatrixXf embeddings(store.size(), store.dim);
  for (std::size_t i = 0; i < store.records.size(); ++i) {
    ids.push_back(store.records[i].track_id);
    embeddings.row(static_cast<Eigen::Index>(i)) =
        store.records[i].track_embedding.transpose();
  }
  return build(std::move(ids), embeddings, metric);
}

VectorIndex VectorIndex::build(std::vector<std::string> ids,
                               const Eigen::MatrixXf& embeddings,
                               Metric metric) {
  if (ids.empty()) throw DataError("index build: no entries");
  if (static_cast<Eigen::Index>(ids.size()) != embeddings.rows())
    throw DataError("index build: id/embedding count mismatch");
  std::unordered_set<std::string> seen;
  for (const auto& id : ids)
    if (!seen.insert(id).second)
      throw DataError("index build: duplicate track id: " + id);

  VectorIndex index;
  index.ids_ = std::move(ids);
  index.embeddings_ = embeddings;
  index.metric_ = metric;
  if (metric == Metric::Cosine) {
    index.unit_embeddings_ = embeddings;
    for (Eigen::Index r = 0; r < embeddings.rows(); ++r) {
      const float n = embeddings.row(r).norm();
      if (!(n > 0.0f))
        throw DataError("index build: zero-norm embedding under cosine metric (id " +
                        index.ids_[static_cast<std::size_t>(r)] + ")");
      index.unit_embeddings_.row(r) /= n;
    }
  } else {
    index.sq_norms_ = embeddings.rowwise().squaredNorm();
  }
  return index;
}

Eigen::VectorXf VectorIndex::distances_to_all(const Embedding& query) const {
  if (query.size() != embeddings_.cols())
    throw DataError("knn: query dim " + std::to_string(query.size()) +
                    " does not match index dim " +
                    std::to_string(embeddings_.cols()));
  if (metric_ == Metric::Cosine) {
    const float qn = query.norm();
    if (!(qn > 0.0f)) throw DataError("knn: zero-norm query under cosine metric");
    Eigen::VectorXf sims = unit_embeddings_ * (query / qn);
    return (1.0f - sims.array()).matrix();
  }
  Eigen::VectorXf dots = embeddings_ * query;
  Eigen::VectorXf sq =
      (sq_norms_.array() - 2.0f * dots.array() + query.squaredNorm()).max(0.0f);
  return sq.array().sqrt().matrix();
}

QueryResult VectorIndex::top_k_from_distances(
    const Eigen::VectorXf& dist, int k,
    const std::optional<std::string>& exclude_id) const {
  if (k < 1) throw ConfigError("knn: k must be >= 1");
  std::vector<int> order(ids_.size());
  std::iota(order.begin(), order.end(), 0);
  if (exclude_id) {
    order.erase(std::remove_if(order.begin(), order.end(),
                               [&](int i) { return ids_[i] == *exclude_id; }),
                order.end());
  }
  auto better = [&](int a, int b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return ids_[a] < ids_[b];
  };
  QueryResult result;
  if (static_cast<std::size_t>(k) >= order.size()) {
    std::sort(order.begin(), order.end(), better);
    result.truncated = static_cast<std::size_t>(k) > order.size();
  } else {
    std::partial_sort(order.begin(), order.begin() + k, order.end(), better);
    order.resize(k);
  }
  result.neighbors.reserve(order.size());
  for (int i : order) result.neighbors.push_back({ids_[i], dist[i]});
  return result;
}

QueryResult VectorIndex::knn(const Embedding& query, int k,
                             const std::optional<std::string>& exclude_id) const {
  return top_k_from_distances(distances_to_all(query), k, exclude_id);
}

QueryResult VectorIndex::contour_knn(
    std::span<const Embedding> points, int k,
    const std::optional<std::string>& exclude_id) const {
  if (points.empty()) throw DataError("contour_knn: empty point list");
  // Candidates: union of each point's k nearest, keeping per id the minimum
  // distance to any point.
  std::unordered_map<std::string, float> best;
  for (const auto& p : points) {
    QueryResult local = knn(p, k, exclude_id);
    for (const auto& n : local.neighbors) {
      auto [it, inserted] = best.try_emplace(n.track_id, n.distance);
      if (!inserted && n.distance < it->second) it->second = n.distance;
    }
  }
  std::vector<Neighbor> merged;
  merged.reserve(best.size());
  for (const auto& [id, d] : best) merged.push_back({id, d});
  std::sort(merged.begin(), merged.end(), [](const Neighbor& a, const Neighbor& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.track_id < b.track_id;
  });
  QueryResult result;
  if (merged.size() > static_cast<std::size_t>(k)) merged.resize(k);
  result.truncated = merged.size() < static_cast<std::size_t>(k);
  result.neighbors = std::move(merged);
  return result;
}

std::vector<QueryResult> VectorIndex::knn_batch(
    const Eigen::MatrixXf& queries, int k,
    std::span<const std::string> exclude_ids, int threads) const {
  if (!exclude_ids.empty() &&
      exclude_ids.size() != static_cast<std::size_t>(queries.rows()))
    throw DataError("knn_batch: exclude list must be empty or match query count");
  std::vector<QueryResult> results(queries.rows());
  parallel_for(static_cast<int>(queries.rows()), threads, [&](int i) {
    std::optional<std::string> exclude;
    if (!exclude_ids.empty()) exclude = exclude_ids[i];
    results[i] = knn(queries.row(i).transpose(), k, exclude);
    results[i].query_id = exclude;
  });
  return results;
}

std::vector<Embedding> contour_points(const translator::TranslatorModel& model,
                                      const Embedding& z,
                                      const ContourConfig& config) {
  config.validate();
  std::vector<float> taus;
  taus.reserve(config.point_count());
  for (int c = -config.c_count; c <= config.c_count; ++c)
    taus.push_back(1.0f + static_cast<float>(c) * config.delta);
  Eigen::MatrixXf batch(taus.size(), z.size());
  batch.rowwise() = z.transpose();
  Eigen::MatrixXf out = translator::translate_batch(model, batch, taus);
  std::vector<Embedding> points;
  points.reserve(taus.size());
  for (Eigen::Index r = 0; r < out.rows(); ++r)
    points.push_back(out.row(r).transpose());
  return points;
}

std::vector<Embedding> gaussian_cluster_points(const Embedding& z, float sigma,
                                               int count, Rng& rng) {
  if (!(sigma >= 0.0f)) throw ConfigError("gaussian points: sigma must be >= 0");
  if (count < 1) throw ConfigError("gaussian points: count must be >= 1");
  std::vector<Embedding> points(count, z);
  if (sigma > 0.0f)
    for (auto& p : points)
      for (Eigen::Index i = 0; i < p.size(); ++i)
        p[i] += sigma * static_cast<float>(rng.normal());
  return points;
}

std::vector<Embedding> linear_interp_points(const Embedding& a,
                                            const Embedding& b, int count) {
  if (count < 2) throw ConfigError("interp points: count must be >= 2");
  if (a.size() != b.size()) throw DataError("interp points: dim mismatch");
  std::vector<Embedding> points;
  points.reserve(count);
  for (int i = 0; i < count; ++i) {
    const float t = static_cast<float>(i) / static_cast<float>(count - 1);
    points.push_back(a + t * (b - a));
  }
  return points;
}

}  // namespace tempowarp::retrieval
