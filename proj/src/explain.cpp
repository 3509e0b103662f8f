#include "linkage/explain.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include "linkage/csv.hpp"
#include "linkage/linalg.hpp"
#include "linkage/rng.hpp"

namespace linkage {

namespace {

// Mean model score over the background with the coalition's features taken
// from the instance and the rest from each background row.
double coalition_value(const ScoreFn& score, std::span<const uint8_t> instance,
                       const std::vector<std::vector<uint8_t>>& background,
                       const std::vector<uint8_t>& mask) {
  double sum = 0.0;
  std::vector<uint8_t> composite(instance.size());
  for (const auto& row : background) {
    for (size_t j = 0; j < composite.size(); ++j)
      composite[j] = mask[j] ? instance[j] : row[j];
    sum += score(composite);
  }
  return sum / double(background.size());
}

double log_comb(size_t n, size_t k) {
  return std::lgamma(double(n + 1)) - std::lgamma(double(k + 1)) -
         std::lgamma(double(n - k + 1));
}

}  // namespace

ShapReport kernel_shap(const ScoreFn& score, size_t n_features,
                       std::span<const uint8_t> instance,
                       const std::vector<std::vector<uint8_t>>& background,
                       size_t n_coalitions, uint64_t seed) {
  const size_t p = n_features;
  if (p == 0) throw Error("kernel_shap: no features");
  if (background.empty()) throw Error("kernel_shap: background must be non-empty");
  if (instance.size() != p) throw Error("kernel_shap: instance length mismatch");
  for (const auto& row : background)
    if (row.size() != p) throw Error("kernel_shap: background row length mismatch");
  if (n_coalitions < p + 2)
    throw Error("kernel_shap: need at least P+2 coalitions");

  ShapReport report;
  report.instance.assign(instance.begin(), instance.end());
  report.base_value = coalition_value(score, instance, background,
                                      std::vector<uint8_t>(p, 0));
  const double full_value = score(instance);
  const double total = full_value - report.base_value;

  if (p == 1) {
    report.weights = {total};
    return report;
  }

  // Collected coalitions: mask -> accumulated regression weight.
  std::map<std::vector<uint8_t>, double> coalitions;
  const bool exhaustive = p <= 24 && (size_t(1) << p) - 2 <= n_coalitions;
  if (exhaustive) {
    for (size_t bits = 1; bits + 1 < (size_t(1) << p); ++bits) {
      std::vector<uint8_t> mask(p, 0);
      size_t size = 0;
      for (size_t j = 0; j < p; ++j)
        if (bits & (size_t(1) << j)) {
          mask[j] = 1;
          ++size;
        }
      // Shapley kernel: (P-1) / (C(P,s) * s * (P-s))
      const double w = (double(p) - 1.0) /
                       (std::exp(log_comb(p, size)) * double(size) * double(p - size));
      coalitions[std::move(mask)] = w;
    }
  } else {
    // Sample coalition sizes proportional to the kernel mass per size, then
    // uniform subsets of that size; multiplicities act as weights.
    std::vector<double> size_mass(p, 0.0);  // index s-1 for size s in 1..p-1
    double mass_total = 0.0;
    for (size_t s = 1; s < p; ++s) {
      size_mass[s - 1] = (double(p) - 1.0) / (double(s) * double(p - s));
      mass_total += size_mass[s - 1];
    }
    Rng rng(derive_seed(seed, "shap-coalitions"));
    std::vector<size_t> pool(p);
    for (size_t j = 0; j < p; ++j) pool[j] = j;
    for (size_t draw = 0; draw < n_coalitions; ++draw) {
      double u = next_unit(rng) * mass_total;
      size_t s = 1;
      while (s < p - 1 && u > size_mass[s - 1]) {
        u -= size_mass[s - 1];
        ++s;
      }
      seeded_shuffle(pool, rng);
      std::vector<uint8_t> mask(p, 0);
      for (size_t j = 0; j < s; ++j) mask[pool[j]] = 1;
      coalitions[std::move(mask)] += 1.0;
    }
  }

  // Constrained WLS with phi_0 = v(empty) and sum(phi) = v(full) - v(empty)
  // eliminated through the last feature.
  const size_t q = p - 1;
  Matrix ata(q, q);
  std::vector<double> atb(q, 0.0);
  std::vector<double> design(q);
  for (const auto& [mask, w] : coalitions) {
    const double v = coalition_value(score, instance, background, mask);
    const double z_last = mask[p - 1] ? 1.0 : 0.0;
    for (size_t j = 0; j < q; ++j) design[j] = double(mask[j]) - z_last;
    const double target = v - report.base_value - z_last * total;
    for (size_t j = 0; j < q; ++j) {
      if (design[j] == 0.0) continue;
      atb[j] += w * design[j] * target;
      for (size_t k = 0; k <= j; ++k) ata.at(j, k) += w * design[j] * design[k];
    }
  }
  for (size_t j = 0; j < q; ++j)
    for (size_t k = j + 1; k < q; ++k) ata.at(j, k) = ata.at(k, j);

  std::vector<double> head;
  try {
    head = solve_general(ata, atb);
  } catch (const Error&) {
    throw Error("kernel_shap: singular coalition system; increase n_coalitions");
  }
  report.weights.assign(p, 0.0);
  double head_sum = 0.0;
  for (size_t j = 0; j < q; ++j) {
    report.weights[j] = head[j];
    head_sum += head[j];
  }
  report.weights[p - 1] = total - head_sum;
  return report;
}

ScoreFn match_score_fn(const TrainedModel& model) {
  return [&model](std::span<const uint8_t> x) { return score_match_vector(model, x); };
}

ShapReport kernel_shap(const TrainedModel& model, std::span<const uint8_t> instance,
                       const PairwiseDataset& background, size_t n_coalitions, uint64_t seed) {
  std::vector<std::vector<uint8_t>> rows;
  rows.reserve(background.rows.size());
  for (const auto& r : background.rows) rows.push_back(r.match);
  auto report = kernel_shap(match_score_fn(model), model_feature_names(model).size(), instance,
                            rows, n_coalitions, seed);
  report.feature_names = model_feature_names(model);
  return report;
}

namespace {

size_t default_budget(size_t p) {
  const size_t cap = 2 * p + 2048;
  if (p <= 11) return std::min(cap, (size_t(1) << p) - 2);
  return cap;
}

}  // namespace

GlobalShap global_shap(const TrainedModel& model, const PairwiseDataset& dataset,
                       const PairwiseDataset& background, uint64_t seed,
                       size_t n_coalitions) {
  if (dataset.rows.empty()) throw Error("global_shap: dataset must be non-empty");
  const auto& names = model_feature_names(model);
  const size_t p = names.size();
  const size_t budget = n_coalitions == 0 ? default_budget(p) : n_coalitions;

  std::vector<double> mean(p, 0.0);
  for (size_t i = 0; i < dataset.rows.size(); ++i) {
    auto report = kernel_shap(model, dataset.rows[i].match, background, budget,
                              derive_seed(seed, "shap-instance", i));
    for (size_t j = 0; j < p; ++j) mean[j] += report.weights[j];
  }
  for (double& m : mean) m /= double(dataset.rows.size());

  GlobalShap out;
  for (size_t j = 0; j < p; ++j) out.weights.emplace_back(names[j], mean[j]);
  std::stable_sort(out.weights.begin(), out.weights.end(),
                   [](const auto& a, const auto& b) {
                     return std::fabs(a.second) > std::fabs(b.second);
                   });
  return out;
}

void write_shap_csv(const GlobalShap& shap, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "feature,weight\n";
  for (const auto& [name, w] : shap.weights)
    out << csv_escape(name) << ',' << format_double(w) << '\n';
}

void write_shap_csv(const ShapReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "feature,weight\n";
  std::vector<size_t> order(report.weights.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return std::fabs(report.weights[a]) > std::fabs(report.weights[b]);
  });
  for (size_t i : order) {
    const std::string name =
        i < report.feature_names.size() ? report.feature_names[i] : "f" + std::to_string(i);
    out << csv_escape(name) << ',' << format_double(report.weights[i]) << '\n';
  }
}

}  // namespace linkage
