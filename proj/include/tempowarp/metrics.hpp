#pragma once

#include <span>
#include <string>
#include <vector>

#include "tempowarp/common.hpp"

namespace tempowarp::metrics {

inline constexpr double kAcc1Tolerance = 0.04;

/// Metrical-level factors admitted by Accuracy 2.
std::span<const double> acc2_factors();

/// Accuracy 1: |estimate/truth - 1| <= tolerance. The comparison admits a
/// hair of relative slack (1e-9) so exact-rational boundary cases such as
/// (104, 100) at 4% land inside, as the definition intends.
bool acc1(double estimate_bpm, double truth_bpm, double tolerance = kAcc1Tolerance);

/// Accuracy 2: acc1 against phi * truth for any phi in factors.
bool acc2(double estimate_bpm, double truth_bpm, double tolerance = kAcc1Tolerance,
          std::span<const double> factors = acc2_factors());

/// Fraction of the first k neighbors whose tempo passes acc1 against the
/// translated query tempo T' = tau * T. k is capped at the list length.
double neighbor_tempo_acc1(double query_tempo_translated,
                           std::span<const double> neighbor_tempi, int k);

/// Tag sets are sorted unique string vectors (TrackRecord convention).
using TagSet = std::vector<std::string>;

/// Per query tag t: fraction of neighbors carrying t; returns the mean over
/// query tags. Queries with no tags must be skipped by the caller (throws).
double neighbor_tag_precision(const TagSet& query_tags,
                              std::span<const TagSet> neighbor_tags);

/// True iff any neighbor shares at least one tag with the query.
bool tag_retrieval_hit(const TagSet& query_tags,
                       std::span<const TagSet> neighbor_tags);

/// Mean of a score list (dataset-level aggregate). Empty input throws.
double mean(std::span<const double> values);

}  // namespace tempowarp::metrics
