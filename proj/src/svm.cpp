#include <algorithm>
#include <cmath>

#include "linkage/models.hpp"
#include "linkage/rng.hpp"

namespace linkage {

namespace {

constexpr double kDcdTol = 1e-6;
constexpr size_t kDcdMaxEpochs = 1000;
constexpr size_t kPlattFolds = 3;

struct DcdProblem {
  // Bias handled as a constant appended feature, so it is (mildly)
  // regularized along with the weights; this is the usual dual-coordinate
  // trick and is documented behaviour.
  std::vector<std::vector<double>> x;  // rows, each of length p+1 with x[p]=1
  std::vector<int8_t> y;               // +1 linked, -1 unlinked
  std::vector<double> c;               // per-row upper bound
};

struct DcdResult {
  std::vector<double> w;  // length p+1, last entry is the bias
  std::vector<double> objective_trace;
};

DcdResult solve_dual(const DcdProblem& prob, uint64_t seed) {
  const size_t n = prob.x.size();
  const size_t dim = prob.x[0].size();
  std::vector<double> alpha(n, 0.0), w(dim, 0.0), qii(n, 0.0);
  for (size_t i = 0; i < n; ++i)
    for (double v : prob.x[i]) qii[i] += v * v;

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, "svm-dcd"));

  DcdResult res;
  double alpha_sum = 0.0;
  for (size_t epoch = 0; epoch < kDcdMaxEpochs; ++epoch) {
    seeded_shuffle(order, rng);
    double pg_max = -1e300, pg_min = 1e300;
    for (size_t idx : order) {
      double g = -1.0;
      for (size_t d = 0; d < dim; ++d) g += prob.y[idx] * w[d] * prob.x[idx][d];
      double pg = g;
      if (alpha[idx] <= 0.0) pg = std::min(g, 0.0);
      else if (alpha[idx] >= prob.c[idx]) pg = std::max(g, 0.0);
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::fabs(pg) > 1e-14) {
        const double old = alpha[idx];
        const double next = std::clamp(old - g / qii[idx], 0.0, prob.c[idx]);
        if (next != old) {
          const double d_alpha = next - old;
          for (size_t d = 0; d < dim; ++d) w[d] += d_alpha * prob.y[idx] * prob.x[idx][d];
          alpha_sum += d_alpha;
          alpha[idx] = next;
        }
      }
    }
    double wnorm = 0.0;
    for (double v : w) wnorm += v * v;
    res.objective_trace.push_back(0.5 * wnorm - alpha_sum);
    if (pg_max - pg_min < kDcdTol) break;
  }
  res.w = std::move(w);
  return res;
}

DcdProblem build_problem(const PairwiseDataset& pairs, const std::vector<size_t>& rows,
                         double c, double weight_linked, double weight_unlinked) {
  DcdProblem prob;
  const size_t p = pairs.n_features();
  prob.x.reserve(rows.size());
  for (size_t r : rows) {
    std::vector<double> xi(p + 1, 1.0);
    for (size_t j = 0; j < p; ++j) xi[j] = pairs.rows[r].match[j];
    prob.x.push_back(std::move(xi));
    const bool linked = pairs.rows[r].label == PairLabel::Linked;
    prob.y.push_back(linked ? 1 : -1);
    prob.c.push_back(c * (linked ? weight_linked : weight_unlinked));
  }
  return prob;
}

double decision(const std::vector<double>& w_aug, std::span<const uint8_t> x) {
  double d = w_aug.back();
  for (size_t j = 0; j + 1 < w_aug.size(); ++j) d += w_aug[j] * x[j];
  return d;
}

}  // namespace

SvmModel train_svm(const PairwiseDataset& pairs, double c,
                   std::optional<std::pair<double, double>> class_weights, uint64_t seed) {
  if (!(c > 0.0)) throw Error("train_svm: cost must be positive");
  const auto y = labels01(pairs);
  size_t n_linked = 0;
  for (uint8_t v : y) n_linked += v;
  const size_t n = y.size();
  if (n_linked == 0 || n_linked == n)
    throw Error("train_svm: both classes must be present");

  double w_linked, w_unlinked;
  if (class_weights) {
    w_linked = class_weights->first;
    w_unlinked = class_weights->second;
    if (!(w_linked > 0.0) || !(w_unlinked > 0.0))
      throw Error("train_svm: class weights must be positive");
  } else {
    // Inverse class frequencies, normalised so the mean weight is 1.
    w_linked = double(n) / (2.0 * double(n_linked));
    w_unlinked = double(n) / (2.0 * double(n - n_linked));
  }

  std::vector<size_t> all(n);
  for (size_t i = 0; i < n; ++i) all[i] = i;
  DcdResult full = solve_dual(build_problem(pairs, all, c, w_linked, w_unlinked), seed);

  SvmModel model;
  model.cost = c;
  model.weight_linked = w_linked;
  model.weight_unlinked = w_unlinked;
  model.feature_names = pairs.feature_names;
  model.seed = seed;
  model.objective_trace = full.objective_trace;
  model.bias = full.w.back();
  model.weights.assign(full.w.begin(), full.w.end() - 1);

  for (size_t i = 0; i < n; ++i) {
    const double d = decision(full.w, pairs.rows[i].match);
    const double margin = (y[i] ? 1.0 : -1.0) * d;
    if (margin <= 1.0 + 1e-9) (y[i] ? model.support_linked : model.support_unlinked)++;
  }

  // Platt scaling on cross-validated decision values. With too few linked
  // rows for stratified folds, fall back to in-sample decisions.
  std::vector<double> cv_decision(n, 0.0);
  bool used_cv = n_linked >= kPlattFolds && (n - n_linked) >= kPlattFolds;
  if (used_cv) {
    std::vector<size_t> fold(n, 0);
    std::vector<size_t> linked_rows, unlinked_rows;
    for (size_t i = 0; i < n; ++i) (y[i] ? linked_rows : unlinked_rows).push_back(i);
    Rng rng(derive_seed(seed, "platt-folds"));
    seeded_shuffle(linked_rows, rng);
    seeded_shuffle(unlinked_rows, rng);
    for (size_t i = 0; i < linked_rows.size(); ++i) fold[linked_rows[i]] = i % kPlattFolds;
    for (size_t i = 0; i < unlinked_rows.size(); ++i) fold[unlinked_rows[i]] = i % kPlattFolds;
    for (size_t f = 0; f < kPlattFolds; ++f) {
      std::vector<size_t> train_rows;
      for (size_t i = 0; i < n; ++i)
        if (fold[i] != f) train_rows.push_back(i);
      DcdResult part = solve_dual(build_problem(pairs, train_rows, c, w_linked, w_unlinked),
                                  derive_seed(seed, "platt-fold", f));
      for (size_t i = 0; i < n; ++i)
        if (fold[i] == f) cv_decision[i] = decision(part.w, pairs.rows[i].match);
    }
  } else {
    for (size_t i = 0; i < n; ++i) cv_decision[i] = decision(full.w, pairs.rows[i].match);
  }

  Matrix d(n, 1);
  for (size_t i = 0; i < n; ++i) d.at(i, 0) = cv_decision[i];
  LogisticFit platt = fit_logistic(d, y);
  model.platt_a = -platt.coefficients[0];
  model.platt_b = -platt.intercept;
  return model;
}

std::vector<double> svm_decision_values(const SvmModel& model, const PairwiseDataset& pairs) {
  if (pairs.feature_names != model.feature_names)
    throw Error("svm_decision_values: feature schema mismatch");
  std::vector<double> out;
  out.reserve(pairs.rows.size());
  for (const auto& row : pairs.rows) {
    double d = model.bias;
    for (size_t j = 0; j < model.weights.size(); ++j) d += model.weights[j] * row.match[j];
    out.push_back(d);
  }
  return out;
}

}  // namespace linkage
