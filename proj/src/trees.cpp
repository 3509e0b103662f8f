#include <algorithm>
#include <cmath>

#include "linkage/models.hpp"
#include "linkage/rng.hpp"

namespace linkage {

namespace {

constexpr size_t kMinLeaf = 2;

double clamp_log_odds(double p) {
  p = std::clamp(p, 1e-9, 1.0 - 1e-9);
  return std::clamp(std::log(p / (1.0 - p)), -30.0, 30.0);
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// ---- classification CART ---------------------------------------------------

struct CartBuilder {
  const PairwiseDataset& pairs;
  const std::vector<uint8_t>& y;
  const std::vector<size_t>& features;
  size_t min_leaf;
  Tree tree;

  double gini(size_t pos, size_t n) const {
    if (n == 0) return 0.0;
    const double f = double(pos) / double(n);
    return 2.0 * f * (1.0 - f);
  }

  int32_t grow(std::vector<size_t>& rows) {
    size_t pos = 0;
    for (size_t r : rows) pos += y[r];
    const double node_value = double(pos) / double(rows.size());

    int best_feature = -1;
    double best_decrease = 1e-12;
    if (pos != 0 && pos != rows.size() && rows.size() >= 2 * min_leaf) {
      const double parent = gini(pos, rows.size());
      for (size_t f : features) {
        size_t n1 = 0, pos1 = 0;
        for (size_t r : rows) {
          if (pairs.rows[r].match[f]) {
            ++n1;
            pos1 += y[r];
          }
        }
        const size_t n0 = rows.size() - n1;
        if (n0 < min_leaf || n1 < min_leaf) continue;
        const size_t pos0 = pos - pos1;
        const double child =
            (double(n0) * gini(pos0, n0) + double(n1) * gini(pos1, n1)) / double(rows.size());
        const double decrease = parent - child;
        // strict improvement required; scanning features in ascending order
        // keeps the lowest index on ties
        if (decrease > best_decrease) {
          best_decrease = decrease;
          best_feature = int(f);
        }
      }
    }

    const int32_t id = int32_t(tree.size());
    tree.push_back({});
    if (best_feature < 0) {
      tree[id].value = node_value;
      return id;
    }
    std::vector<size_t> left, right;
    for (size_t r : rows)
      (pairs.rows[r].match[size_t(best_feature)] ? right : left).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    tree[id].feature = best_feature;
    tree[id].left = grow(left);
    tree[id].right = grow(right);
    return id;
  }
};

}  // namespace

double tree_value(const Tree& tree, std::span<const uint8_t> x) {
  int32_t node = 0;
  while (tree[size_t(node)].feature >= 0) {
    const auto& n = tree[size_t(node)];
    node = x[size_t(n.feature)] ? n.right : n.left;
  }
  return tree[size_t(node)].value;
}

Tree fit_cart(const PairwiseDataset& pairs, const std::vector<size_t>& rows,
              const std::vector<size_t>& features, size_t min_leaf) {
  if (rows.empty()) throw Error("fit_cart: no rows");
  const auto y = labels01(pairs);
  CartBuilder builder{pairs, y, features, min_leaf, {}};
  std::vector<size_t> work = rows;
  builder.grow(work);
  return std::move(builder.tree);
}

ForestModel train_random_forest(const PairwiseDataset& pairs, size_t n_trees, size_t m_features,
                                uint64_t seed, bool bootstrap) {
  const size_t p = pairs.n_features();
  if (n_trees == 0) throw Error("train_random_forest: need at least one tree");
  if (m_features < 1 || m_features > p)
    throw Error("train_random_forest: M must be between 1 and the feature count");
  if (pairs.rows.empty()) throw Error("train_random_forest: empty dataset");
  const auto y = labels01(pairs);

  ForestModel model;
  model.n_trees = n_trees;
  model.m_features = m_features;
  model.seed = seed;
  model.feature_names = pairs.feature_names;
  model.trees.reserve(n_trees);

  const size_t n = pairs.rows.size();
  for (size_t t = 0; t < n_trees; ++t) {
    Rng rng(derive_seed(seed, "forest-tree", t));
    // feature subset without replacement, one subset per tree
    std::vector<size_t> pool(p);
    for (size_t j = 0; j < p; ++j) pool[j] = j;
    seeded_shuffle(pool, rng);
    std::vector<size_t> features(pool.begin(), pool.begin() + std::ptrdiff_t(m_features));
    std::sort(features.begin(), features.end());

    std::vector<size_t> rows(n);
    if (bootstrap) {
      for (size_t i = 0; i < n; ++i) rows[i] = size_t(next_below(rng, n));
    } else {
      for (size_t i = 0; i < n; ++i) rows[i] = i;
    }
    CartBuilder builder{pairs, y, features, kMinLeaf, {}};
    builder.grow(rows);
    model.trees.push_back(std::move(builder.tree));
  }
  return model;
}

// ---- gradient boosting ------------------------------------------------------

namespace {

struct BoostBuilder {
  const PairwiseDataset& pairs;
  const std::vector<double>& grad;
  const std::vector<double>& hess;
  double lambda_reg;
  size_t max_depth;
  Tree tree;

  int32_t grow(std::vector<size_t>& rows, size_t depth) {
    double g = 0.0, h = 0.0;
    for (size_t r : rows) {
      g += grad[r];
      h += hess[r];
    }

    int best_feature = -1;
    double best_gain = 1e-12;
    if (depth < max_depth && rows.size() >= 2 * kMinLeaf) {
      const double parent = g * g / (h + lambda_reg);
      for (size_t f = 0; f < pairs.n_features(); ++f) {
        double g1 = 0.0, h1 = 0.0;
        size_t n1 = 0;
        for (size_t r : rows) {
          if (pairs.rows[r].match[f]) {
            g1 += grad[r];
            h1 += hess[r];
            ++n1;
          }
        }
        const size_t n0 = rows.size() - n1;
        if (n0 < kMinLeaf || n1 < kMinLeaf) continue;
        const double g0 = g - g1, h0 = h - h1;
        const double gain =
            0.5 * (g0 * g0 / (h0 + lambda_reg) + g1 * g1 / (h1 + lambda_reg) - parent);
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = int(f);
        }
      }
    }

    const int32_t id = int32_t(tree.size());
    tree.push_back({});
    if (best_feature < 0) {
      tree[id].value = -g / (h + lambda_reg);
      return id;
    }
    std::vector<size_t> left, right;
    for (size_t r : rows)
      (pairs.rows[r].match[size_t(best_feature)] ? right : left).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    tree[id].feature = best_feature;
    tree[id].left = grow(left, depth + 1);
    tree[id].right = grow(right, depth + 1);
    return id;
  }
};

}  // namespace

BoostedModel train_boosted(const PairwiseDataset& pairs, double eta, size_t n_rounds,
                           size_t max_depth, double lambda_reg, uint64_t seed) {
  if (max_depth < 1) throw Error("train_boosted: depth must be >= 1");
  if (lambda_reg < 0.0) throw Error("train_boosted: lambda_reg must be >= 0");
  if (pairs.rows.empty()) throw Error("train_boosted: empty dataset");
  const auto y = labels01(pairs);
  const size_t n = y.size();

  double pbar = 0.0;
  for (uint8_t v : y) pbar += v;
  pbar /= double(n);

  BoostedModel model;
  model.eta = eta;
  model.n_rounds = n_rounds;
  model.max_depth = max_depth;
  model.lambda_reg = lambda_reg;
  model.seed = seed;
  model.feature_names = pairs.feature_names;
  model.base_log_odds = clamp_log_odds(pbar);

  std::vector<double> margin(n, model.base_log_odds);
  std::vector<double> grad(n), hess(n);
  for (size_t round = 0; round < n_rounds; ++round) {
    for (size_t i = 0; i < n; ++i) {
      const double pi = sigmoid(margin[i]);
      grad[i] = pi - double(y[i]);
      hess[i] = std::max(pi * (1.0 - pi), 1e-12);
    }
    BoostBuilder builder{pairs, grad, hess, lambda_reg, max_depth, {}};
    std::vector<size_t> rows(n);
    for (size_t i = 0; i < n; ++i) rows[i] = i;
    builder.grow(rows, 0);
    Tree tree = std::move(builder.tree);
    for (size_t i = 0; i < n; ++i) margin[i] += eta * tree_value(tree, pairs.rows[i].match);
    model.trees.push_back(std::move(tree));

    double loss = 0.0;
    for (size_t i = 0; i < n; ++i) {
      const double pi = std::clamp(sigmoid(margin[i]), 1e-12, 1.0 - 1e-12);
      loss -= y[i] ? std::log(pi) : std::log1p(-pi);
    }
    model.loss_trace.push_back(loss / double(n));
  }
  return model;
}

}  // namespace linkage
