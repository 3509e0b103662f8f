#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "linkage/models.hpp"
#include "linkage/pairing.hpp"

namespace linkage {

struct ConfusionMatrix {
  size_t tp = 0, fp = 0, tn = 0, fn = 0;
  size_t total() const { return tp + fp + tn + fn; }
};

/// All rates are fractions in [0,1]; a missing value means the denominator
/// was zero (explicit marker rather than NaN). `hm` is the harmonic mean of
/// precision and sensitivity.
struct MetricsReport {
  std::optional<double> se, sp, p, hm, acc, auroc;
  double threshold = 0.5;
  ConfusionMatrix confusion;
};

struct CostSpec {
  double fn_cost = 1.0;
  double fp_cost = 1.0;
  double prevalence = 0.5;  // fraction of linked pairs
};

/// r = (fp_cost / fn_cost) * ((1 - prevalence) / prevalence): the weight on
/// specificity in the threshold objective SE + r*SP.
double cost_weight(const CostSpec& spec);

struct SplitResult {
  PairwiseDataset train;
  PairwiseDataset test;
  std::optional<std::string> warning;
};

/// Seeded disjoint, exhaustive partition. Stratified splits keep each
/// class's train fraction within one row of the target and error if either
/// side would lose a class; unstratified splits only warn.
SplitResult split(const PairwiseDataset& pairs, double train_fraction, uint64_t seed,
                  bool stratified);

/// Predicted positive iff score >= threshold.
ConfusionMatrix confusion(const std::vector<uint8_t>& labels, const std::vector<double>& scores,
                          double threshold);

MetricsReport metrics(const ConfusionMatrix& cm);

/// Mann-Whitney concordance probability with ties counted 1/2. Requires
/// both classes.
double auroc(const std::vector<uint8_t>& labels, const std::vector<double>& scores);

/// Trapezoidal area under the empirical ROC polygon; second route used by
/// the invariant checks.
double auroc_trapezoid(const std::vector<uint8_t>& labels, const std::vector<double>& scores);

/// Midpoints between consecutive distinct scores plus below-all/above-all
/// sentinel cuts.
std::vector<double> threshold_candidates(const std::vector<double>& scores);

/// The candidate threshold maximizing SE + r*SP; ties broken by higher SE,
/// then lower threshold.
double pick_threshold(const std::vector<uint8_t>& labels, const std::vector<double>& scores,
                      double r);

void write_roc_csv(const std::vector<uint8_t>& labels, const std::vector<double>& scores,
                   const std::string& path);
void write_pr_csv(const std::vector<uint8_t>& labels, const std::vector<double>& scores,
                  const std::string& path);

std::string metrics_report_json(const MetricsReport& report);

// ---- grid search -----------------------------------------------------------

enum class ModelFamily { LR1, LR6, ElasticNet, Svm, Forest, Boosted };

/// A method is a model family optionally preceded by the k-NN filter and/or
/// ROSE rebalancing of the training pairs, e.g. "kf-rose-svm".
struct MethodSpec {
  ModelFamily family = ModelFamily::LR1;
  bool kf = false;
  bool rose = false;
};

MethodSpec parse_method(const std::string& name);
std::string method_name(const MethodSpec& method);

struct GridSpec {
  MethodSpec method;
  /// Parameter ladders by canonical key (k, p, h, c, lambda, alpha,
  /// n_trees, m_features, eta, rounds, depth, lambda_reg). Cells are the
  /// Cartesian product in key-sorted, ladder-ordered enumeration.
  std::map<std::string, std::vector<double>> ladders;
  uint64_t master_seed = 1;
  double r = 1.0;
  /// Default thresholds come from held-out folds of the training set;
  /// paper mode picks them directly on the evaluation scores.
  bool paper_mode = false;
  size_t cv_folds = 3;
  size_t threads = 1;
};

struct GridResult {
  size_t cell_index = 0;
  std::map<std::string, double> params;
  double threshold = 0.5;
  MetricsReport report;
};

/// Trains every cell on `train`, thresholds per GridSpec, evaluates on
/// `eval`, and ranks by SE desc, SP desc, then lexicographic parameters.
/// Cell seeds derive from the master seed and the canonical cell index, so
/// results do not depend on evaluation order or thread count.
std::vector<GridResult> grid_search(const GridSpec& spec, const PairwiseDataset& train,
                                    const PairwiseDataset& eval, const Codebook* codebook);

std::string grid_results_json(const std::vector<GridResult>& results);

}  // namespace linkage
