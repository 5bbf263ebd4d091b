#include "tempowarp/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace tempowarp::metrics {

namespace {
constexpr std::array<double, 5> kAcc2Factors = {1.0 / 3.0, 0.5, 1.0, 2.0, 3.0};
}

std::span<const double> acc2_factors() { return kAcc2Factors; }

bool acc1(double estimate_bpm, double truth_bpm, double tolerance) {
  if (!(estimate_bpm > 0.0) || !(truth_bpm > 0.0))
    throw DataError("acc1: tempi must be positive");
  if (!(tolerance >= 0.0)) throw ConfigError("acc1: tolerance must be >= 0");
  return std::abs(estimate_bpm / truth_bpm - 1.0) <= tolerance * (1.0 + 1e-9);
}

bool acc2(double estimate_bpm, double truth_bpm, double tolerance,
          std::span<const double> factors) {
  for (double phi : factors)
    if (acc1(estimate_bpm, phi * truth_bpm, tolerance)) return true;
  return false;
}

double neighbor_tempo_acc1(double query_tempo_translated,
                           std::span<const double> neighbor_tempi, int k) {
  if (neighbor_tempi.empty()) throw DataError("neighbor acc1: empty neighbor list");
  if (k < 1) throw ConfigError("neighbor acc1: k must be >= 1");
  const int n = std::min<int>(k, static_cast<int>(neighbor_tempi.size()));
  int hits = 0;
  for (int i = 0; i < n; ++i)
    if (acc1(neighbor_tempi[i], query_tempo_translated)) ++hits;
  return static_cast<double>(hits) / static_cast<double>(n);
}

namespace {
bool has_tag(const TagSet& tags, const std::string& tag) {
  return std::binary_search(tags.begin(), tags.end(), tag);
}
}  // namespace

double neighbor_tag_precision(const TagSet& query_tags,
                              std::span<const TagSet> neighbor_tags) {
  if (query_tags.empty())
    throw DataError("tag precision: query has no tags (skip such queries)");
  if (neighbor_tags.empty()) throw DataError("tag precision: no neighbors");
  double sum = 0.0;
  for (const auto& tag : query_tags) {
    int carrying = 0;
    for (const auto& tags : neighbor_tags)
      if (has_tag(tags, tag)) ++carrying;
    sum += static_cast<double>(carrying) /
           static_cast<double>(neighbor_tags.size());
  }
  return sum / static_cast<double>(query_tags.size());
}

bool tag_retrieval_hit(const TagSet& query_tags,
                       std::span<const TagSet> neighbor_tags) {
  if (query_tags.empty())
    throw DataError("tag retrieval: query has no tags (skip such queries)");
  if (neighbor_tags.empty()) throw DataError("tag retrieval: no neighbors");
  for (const auto& tags : neighbor_tags)
    for (const auto& tag : query_tags)
      if (has_tag(tags, tag)) return true;
  return false;
}

double mean(std::span<const double> values) {
  if (values.empty()) throw DataError("mean of empty score list");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace tempowarp::metrics
