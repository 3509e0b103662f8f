#include "linkage/pipeline.hpp"

#include <cmath>

#include "linkage/resampling.hpp"
#include "linkage/rng.hpp"

namespace linkage {

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

TrainedModel train_pipeline(const MethodSpec& method,
                            const std::map<std::string, double>& params,
                            const PairwiseDataset& train, const Codebook* codebook,
                            uint64_t seed) {
  const PairwiseDataset* current = &train;
  PairwiseDataset filtered, rebalanced;
  if (method.kf) {
    KfParams kf;
    kf.k = size_t(param_or(params, "k", 1));
    kf.seed = derive_seed(seed, "kf");
    filtered = kf_filter(*current, kf);
    current = &filtered;
  }
  if (method.rose) {
    RoseParams rose;
    rose.p = param_or(params, "p", 0.29);
    rose.smoothing = param_or(params, "h", 0.1);
    rose.n_out = size_t(param_or(params, "n_out", 0));
    rose.seed = derive_seed(seed, "rose");
    rebalanced = rose_sample(*current, rose);
    current = &rebalanced;
  }

  switch (method.family) {
    case ModelFamily::LR1:
    case ModelFamily::LR6: {
      if (!codebook) throw Error("LR methods require a codebook");
      return train_lr(*current, *codebook,
                      method.family == ModelFamily::LR1 ? LrKind::LR1 : LrKind::LR6);
    }
    case ModelFamily::ElasticNet: {
      ElasticNetParams en;
      en.alpha = param_or(params, "alpha", 0.5);
      en.lambda = param_or(params, "lambda", 0.01);
      return train_elastic_net(*current, en);
    }
    case ModelFamily::Svm:
      return train_svm(*current, param_or(params, "c", 1.0), std::nullopt,
                       derive_seed(seed, "svm"));
    case ModelFamily::Forest:
      return train_random_forest(*current, size_t(param_or(params, "n_trees", 20)),
                                 std::min<size_t>(size_t(param_or(params, "m_features", 7)),
                                                  current->n_features()),
                                 derive_seed(seed, "forest"));
    case ModelFamily::Boosted:
      return train_boosted(*current, param_or(params, "eta", 0.3),
                           size_t(param_or(params, "rounds", 100)),
                           size_t(param_or(params, "depth", 6)),
                           param_or(params, "lambda_reg", 1.0), derive_seed(seed, "boost"));
  }
  throw Error("train_pipeline: unreachable");
}

double cv_threshold(const MethodSpec& method, const std::map<std::string, double>& params,
                    const PairwiseDataset& train, const Codebook* codebook, double r,
                    uint64_t seed, size_t folds) {
  if (folds < 2) throw Error("cv_threshold: need at least 2 folds");
  const auto y = labels01(train);
  const size_t n = y.size();

  // Stratified fold assignment so each held-out part sees both classes.
  std::vector<size_t> fold(n, 0);
  std::vector<size_t> linked_rows, unlinked_rows;
  for (size_t i = 0; i < n; ++i) (y[i] ? linked_rows : unlinked_rows).push_back(i);
  if (linked_rows.size() < folds || unlinked_rows.size() < folds)
    throw Error("cv_threshold: too few rows per class for " + std::to_string(folds) +
                " folds");
  Rng rng(derive_seed(seed, "cv-folds"));
  seeded_shuffle(linked_rows, rng);
  seeded_shuffle(unlinked_rows, rng);
  for (size_t i = 0; i < linked_rows.size(); ++i) fold[linked_rows[i]] = i % folds;
  for (size_t i = 0; i < unlinked_rows.size(); ++i) fold[unlinked_rows[i]] = i % folds;

  std::vector<uint8_t> pooled_labels;
  std::vector<double> pooled_scores;
  pooled_labels.reserve(n);
  pooled_scores.reserve(n);
  for (size_t f = 0; f < folds; ++f) {
    PairwiseDataset fit_part, held_part;
    fit_part.feature_names = train.feature_names;
    held_part.feature_names = train.feature_names;
    fit_part.case_vectors = train.case_vectors;
    held_part.case_vectors = train.case_vectors;
    for (size_t i = 0; i < n; ++i)
      (fold[i] == f ? held_part : fit_part).rows.push_back(train.rows[i]);
    TrainedModel model =
        train_pipeline(method, params, fit_part, codebook, derive_seed(seed, "cv-fold", f));
    const auto scores = predict(model, held_part);
    const auto held_labels = labels01(held_part);
    pooled_labels.insert(pooled_labels.end(), held_labels.begin(), held_labels.end());
    pooled_scores.insert(pooled_scores.end(), scores.begin(), scores.end());
  }
  return pick_threshold(pooled_labels, pooled_scores, r);
}

}  // namespace linkage
