#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "linkage/linalg.hpp"
#include "linkage/pairing.hpp"

namespace linkage {

// All model families score a pair with the probability that it is linked.
// Linked is the positive class throughout.

enum class LinearInputKind {
  JaccardOverall,  // LR1: one predictor, the overall raw-vector Jaccard
  JaccardGroups,   // LR6: one predictor per lr_group
  MatchVector,     // elastic net: the binary match vector
};

struct LinearModel {
  LinearInputKind input_kind = LinearInputKind::MatchVector;
  double intercept = 0.0;
  std::vector<double> coefficients;
  std::vector<int> group_ids;                   // JaccardGroups only, ascending
  std::vector<std::vector<size_t>> group_cols;  // columns per group, same order
  std::vector<std::string> feature_names;       // schema the model was trained on
  bool separation_warning = false;
};

struct ElasticNetParams {
  double alpha = 0.5;
  double lambda = 0.01;
  size_t max_iter = 5000;
  double tol = 1e-7;
};

struct SvmModel {
  std::vector<double> weights;
  double bias = 0.0;
  double cost = 1.0;
  double weight_linked = 1.0;    // hinge weight for the linked class
  double weight_unlinked = 1.0;
  size_t support_linked = 0;
  size_t support_unlinked = 0;
  double platt_a = 0.0;  // score = 1 / (1 + exp(a * decision + b))
  double platt_b = 0.0;
  std::vector<double> objective_trace;  // dual objective after each epoch
  std::vector<std::string> feature_names;
  uint64_t seed = 1;

  size_t support_count() const { return support_linked + support_unlinked; }
};

struct TreeNode {
  int32_t feature = -1;  // -1 marks a leaf
  int32_t left = -1;
  int32_t right = -1;
  double value = 0.0;  // leaf payload: class fraction or boosting weight
};
using Tree = std::vector<TreeNode>;

double tree_value(const Tree& tree, std::span<const uint8_t> x);

struct ForestModel {
  std::vector<Tree> trees;
  size_t n_trees = 0;
  size_t m_features = 0;
  uint64_t seed = 1;
  std::vector<std::string> feature_names;
};

struct BoostedModel {
  std::vector<Tree> trees;
  double eta = 0.3;
  size_t n_rounds = 0;
  size_t max_depth = 6;
  double lambda_reg = 1.0;
  double base_log_odds = 0.0;
  uint64_t seed = 1;
  std::vector<std::string> feature_names;
  std::vector<double> loss_trace;  // mean training log-loss after each round
};

using TrainedModel = std::variant<LinearModel, SvmModel, ForestModel, BoostedModel>;

/// Thrown when an iterative fit runs out of iterations; carries the last
/// iterate so callers can inspect how far it got.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, LinearModel last)
      : Error(what), last_iterate(std::move(last)) {}
  LinearModel last_iterate;
};

// ---- logistic core --------------------------------------------------------

struct LogisticFit {
  double intercept = 0.0;
  std::vector<double> coefficients;
  bool separation_warning = false;
};

/// Maximum-likelihood logistic regression by damped Newton iterations.
/// Coefficients are capped at |beta| <= 30; a binding cap flags separation.
LogisticFit fit_logistic(const Matrix& x, const std::vector<uint8_t>& y,
                         double tol = 1e-8, size_t max_iter = 200);

/// Smooth part of the elastic-net objective: deviance/n plus the ridge term
/// lambda*(1-alpha)*||beta||^2/2. Gradient is over [intercept, beta...].
double en_smooth_objective(const Matrix& x, const std::vector<uint8_t>& y, double intercept,
                           const std::vector<double>& beta, double lambda, double alpha);
std::vector<double> en_smooth_gradient(const Matrix& x, const std::vector<uint8_t>& y,
                                       double intercept, const std::vector<double>& beta,
                                       double lambda, double alpha);

/// Penalized weighted least squares by coordinate descent; the inner solver
/// of the elastic net. Returns [intercept, beta...]. Minimizes
///   (1/2n) sum w_i (z_i - b0 - x_i beta)^2
///   + lambda * (alpha*|beta|_1 + (1-alpha)*|beta|_2^2 / 2).
std::vector<double> elastic_net_wls(const Matrix& x, const std::vector<double>& z,
                                    const std::vector<double>& w, double alpha, double lambda,
                                    double tol = 1e-9, size_t max_iter = 10000);

// ---- training entry points ------------------------------------------------

enum class LrKind { LR1, LR6 };

/// Logistic regression of linkage on raw-vector Jaccard summaries: one
/// predictor for LR1, one per codebook lr_group for LR6.
LinearModel train_lr(const PairwiseDataset& pairs, const Codebook& codebook, LrKind kind);

/// Penalized logistic regression on the match vector, IRLS wrapped around
/// coordinate descent. Throws ConvergenceError at max_iter.
LinearModel train_elastic_net(const PairwiseDataset& pairs, const ElasticNetParams& params);

/// Linear soft-margin SVM trained by dual coordinate descent with the bias
/// folded in as a constant feature. Platt scaling is fit on 3-fold
/// cross-validated decision values; the resulting scores are
/// pseudo-probabilities, not calibrated probabilities in any strict sense.
/// Default class weights are inverse class frequencies.
SvmModel train_svm(const PairwiseDataset& pairs, double c,
                   std::optional<std::pair<double, double>> class_weights, uint64_t seed);

std::vector<double> svm_decision_values(const SvmModel& model, const PairwiseDataset& pairs);

/// Bagged Gini trees on match features; M features drawn per tree without
/// replacement, leaves store the linked-class fraction. `bootstrap = false`
/// is a test hook that grows every tree on the full data.
ForestModel train_random_forest(const PairwiseDataset& pairs, size_t n_trees, size_t m_features,
                                uint64_t seed, bool bootstrap = true);

/// Single CART fit used by the forest; exposed for oracle tests.
Tree fit_cart(const PairwiseDataset& pairs, const std::vector<size_t>& rows,
              const std::vector<size_t>& features, size_t min_leaf);

/// Second-order gradient boosting on logistic loss with L2 leaf-weight
/// regularization.
BoostedModel train_boosted(const PairwiseDataset& pairs, double eta, size_t n_rounds,
                           size_t max_depth, double lambda_reg, uint64_t seed);

// ---- prediction and serialization ------------------------------------------

/// One score per row, in [0,1], order-preserving. Errors if the dataset's
/// feature schema does not match the model's.
std::vector<double> predict(const TrainedModel& model, const PairwiseDataset& pairs);

/// Score a single match vector. Only defined for models whose input is the
/// match vector (elastic net, SVM, forest, boosted); LR1/LR6 throw.
double score_match_vector(const TrainedModel& model, std::span<const uint8_t> x);

const std::vector<std::string>& model_feature_names(const TrainedModel& model);
std::string model_family_name(const TrainedModel& model);

std::string model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const std::string& text);
void write_model(const TrainedModel& model, const std::string& path);
TrainedModel read_model(const std::string& path);

/// 0/1 labels with Linked = 1. Errors on Unknown labels.
std::vector<uint8_t> labels01(const PairwiseDataset& pairs);

}  // namespace linkage
