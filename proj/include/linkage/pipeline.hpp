#pragma once

#include <map>
#include <string>

#include "linkage/evaluation.hpp"

namespace linkage {

/// Applies a method's resampling stages (k-NN filter, then ROSE) to the
/// training pairs and trains the model with the given parameters. Missing
/// parameters fall back to documented defaults. The codebook is required
/// for LR1/LR6 only.
TrainedModel train_pipeline(const MethodSpec& method,
                            const std::map<std::string, double>& params,
                            const PairwiseDataset& train, const Codebook* codebook,
                            uint64_t seed);

/// Leakage-free threshold: out-of-fold scores from a stratified K-fold over
/// the original training rows (resampling happens inside each fold), pooled
/// and fed to pick_threshold.
double cv_threshold(const MethodSpec& method, const std::map<std::string, double>& params,
                    const PairwiseDataset& train, const Codebook* codebook, double r,
                    uint64_t seed, size_t folds);

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback);

}  // namespace linkage
