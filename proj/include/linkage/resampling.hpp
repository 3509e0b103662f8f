#pragma once

#include <cstdint>
#include <vector>

#include "linkage/pairing.hpp"
#include "linkage/rng.hpp"

namespace linkage {

struct RoseParams {
  double p = 0.5;        // target minority proportion
  size_t n_out = 0;      // 0 means "same as input" (rebalance, not inflate)
  double smoothing = 0.1;  // per-feature flip-probability bandwidth h
  uint64_t seed = 1;
};

struct KfParams {
  size_t k = 1;
  uint64_t seed = 1;  // tie-breaking among equal Jaccard neighbours
};

/// The class with fewer rows. Errors on Unknown labels or a single class.
PairLabel minority_label(const PairwiseDataset& data);

/// Smoothed bootstrap in the binary feature space: each output row picks a
/// class (minority with probability p), copies a uniformly drawn seed row of
/// that class and flips each feature independently with probability
/// min(h, 0.5). h = 0 degenerates to plain resampling with replacement.
PairwiseDataset rose_sample(const PairwiseDataset& data, const RoseParams& params);

/// Minority oversampling by interpolation between a minority row and one of
/// its k nearest minority neighbours (Jaccard similarity on match vectors).
/// Appends synthetic rows until the minority fraction reaches the target;
/// the original data is kept as a prefix.
PairwiseDataset smote_sample(const PairwiseDataset& data, double target_minority,
                             size_t k, uint64_t seed);

/// Coordinatewise interpolation: each feature takes the neighbour's value
/// with probability u, otherwise the seed row's. Exposed for testing.
std::vector<uint8_t> smote_interpolate(std::span<const uint8_t> seed_row,
                                       std::span<const uint8_t> neighbour_row, double u,
                                       Rng& rng);

/// Relabels every minority row whose k nearest neighbours (Jaccard on match
/// vectors, self excluded, ties broken by a seeded shuffle) all carry the
/// majority label. Relabelling is simultaneous against the original labels;
/// majority rows are never touched.
PairwiseDataset kf_filter(const PairwiseDataset& data, const KfParams& params);

/// Neighbour ranking shared by kf_filter and smote_sample: for row i, the
/// indices of the k most similar rows among `candidates`, self excluded.
/// The tie order is fixed per call from the seed, so rankings are nested in
/// k (top-k is a prefix of top-(k+1)).
std::vector<size_t> jaccard_neighbours(const PairwiseDataset& data, size_t row,
                                       const std::vector<size_t>& candidates, size_t k,
                                       const std::vector<size_t>& tie_rank);

/// Seeded tie-rank permutation over n rows.
std::vector<size_t> make_tie_rank(size_t n, uint64_t seed);

}  // namespace linkage
