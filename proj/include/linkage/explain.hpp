#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "linkage/models.hpp"

namespace linkage {

/// Additive feature attribution for one scored instance. Local accuracy is
/// enforced by construction: base_value + sum(weights) equals the model
/// score of the instance.
struct ShapReport {
  double base_value = 0.0;
  std::vector<double> weights;
  std::vector<uint8_t> instance;
  std::vector<std::string> feature_names;
};

using ScoreFn = std::function<double(std::span<const uint8_t>)>;

/// Weighted least-squares kernel SHAP over sampled coalitions with Shapley
/// kernel weights. Masked-out features are imputed by marginal averaging
/// over the background rows. When the coalition budget covers all 2^P - 2
/// non-trivial coalitions the enumeration is exhaustive and the result
/// equals the exact Shapley values for this value function.
ShapReport kernel_shap(const ScoreFn& score, size_t n_features,
                       std::span<const uint8_t> instance,
                       const std::vector<std::vector<uint8_t>>& background,
                       size_t n_coalitions, uint64_t seed);

/// Convenience wrapper taking a trained model (match-vector families only)
/// and a background dataset.
ShapReport kernel_shap(const TrainedModel& model, std::span<const uint8_t> instance,
                       const PairwiseDataset& background, size_t n_coalitions, uint64_t seed);

struct GlobalShap {
  /// Signed mean attribution per feature, sorted by descending |weight|.
  std::vector<std::pair<std::string, double>> weights;
};

/// Mean of per-instance attributions over a dataset; instances draw derived
/// seeds so explanations are order-independent. n_coalitions = 0 picks a
/// default budget (exhaustive when feasible).
GlobalShap global_shap(const TrainedModel& model, const PairwiseDataset& dataset,
                       const PairwiseDataset& background, uint64_t seed,
                       size_t n_coalitions = 0);

ScoreFn match_score_fn(const TrainedModel& model);

/// CSV export: feature,weight rows sorted by |weight| descending.
void write_shap_csv(const GlobalShap& shap, const std::string& path);
void write_shap_csv(const ShapReport& report, const std::string& path);

}  // namespace linkage
