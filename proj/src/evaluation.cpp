#include "linkage/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <thread>

#include "linkage/csv.hpp"
#include "linkage/pipeline.hpp"
#include "linkage/rng.hpp"

#include "json.hpp"

namespace linkage {

using nlohmann::ordered_json;

double cost_weight(const CostSpec& spec) {
  if (!(spec.fn_cost > 0.0) || !(spec.fp_cost > 0.0))
    throw Error("cost_weight: costs must be positive");
  if (!(spec.prevalence > 0.0) || !(spec.prevalence < 1.0))
    throw Error("cost_weight: prevalence must be in (0,1)");
  return (spec.fp_cost / spec.fn_cost) * ((1.0 - spec.prevalence) / spec.prevalence);
}

SplitResult split(const PairwiseDataset& pairs, double train_fraction, uint64_t seed,
                  bool stratified) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    throw Error("split: train fraction must be in (0,1)");

  SplitResult out;
  out.train.feature_names = pairs.feature_names;
  out.test.feature_names = pairs.feature_names;
  out.train.case_vectors = pairs.case_vectors;
  out.test.case_vectors = pairs.case_vectors;

  std::vector<size_t> train_rows;
  std::vector<bool> in_train(pairs.rows.size(), false);
  Rng rng(derive_seed(seed, "split"));
  if (stratified) {
    std::map<PairLabel, std::vector<size_t>> by_label;
    for (size_t i = 0; i < pairs.rows.size(); ++i) by_label[pairs.rows[i].label].push_back(i);
    for (auto& [label, rows] : by_label) {
      (void)label;
      seeded_shuffle(rows, rng);
      const size_t take = size_t(std::llround(train_fraction * double(rows.size())));
      for (size_t i = 0; i < rows.size(); ++i)
        if (i < take) in_train[rows[i]] = true;
    }
  } else {
    std::vector<size_t> rows(pairs.rows.size());
    for (size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    seeded_shuffle(rows, rng);
    const size_t take = size_t(std::llround(train_fraction * double(rows.size())));
    for (size_t i = 0; i < take && i < rows.size(); ++i) in_train[rows[i]] = true;
  }
  for (size_t i = 0; i < pairs.rows.size(); ++i)
    (in_train[i] ? out.train : out.test).rows.push_back(pairs.rows[i]);

  auto has_both = [](const PairwiseDataset& d) {
    return d.count(PairLabel::Linked) > 0 && d.count(PairLabel::Unlinked) > 0;
  };
  const bool labelled = pairs.count(PairLabel::Unknown) == 0 && !pairs.rows.empty();
  if (labelled && (!has_both(out.train) || !has_both(out.test))) {
    if (stratified)
      throw Error("split: a stratified split left one side without both classes");
    out.warning = "split left one side without both classes";
  }
  return out;
}

ConfusionMatrix confusion(const std::vector<uint8_t>& labels, const std::vector<double>& scores,
                          double threshold) {
  if (labels.size() != scores.size()) throw Error("confusion: length mismatch");
  ConfusionMatrix cm;
  for (size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    if (labels[i]) (predicted ? cm.tp : cm.fn)++;
    else (predicted ? cm.fp : cm.tn)++;
  }
  return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
  MetricsReport r;
  r.confusion = cm;
  if (cm.tp + cm.fn > 0) r.se = double(cm.tp) / double(cm.tp + cm.fn);
  if (cm.tn + cm.fp > 0) r.sp = double(cm.tn) / double(cm.tn + cm.fp);
  if (cm.tp + cm.fp > 0) r.p = double(cm.tp) / double(cm.tp + cm.fp);
  if (cm.total() > 0) r.acc = double(cm.tp + cm.tn) / double(cm.total());
  if (r.p && r.se && (*r.p + *r.se) > 0.0) r.hm = 2.0 * *r.p * *r.se / (*r.p + *r.se);
  return r;
}

double auroc(const std::vector<uint8_t>& labels, const std::vector<double>& scores) {
  if (labels.size() != scores.size()) throw Error("auroc: length mismatch");
  size_t pos = 0;
  for (uint8_t y : labels) pos += y;
  const size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw Error("auroc: both classes must be present");

  // Sort by score; walk tie groups and give each positive half credit for
  // negatives sharing its score.
  std::vector<size_t> idx(labels.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return scores[a] < scores[b]; });
  double concordant = 0.0;
  size_t neg_below = 0;
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    size_t tie_pos = 0, tie_neg = 0;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? tie_pos : tie_neg)++;
      ++j;
    }
    concordant += double(tie_pos) * (double(neg_below) + 0.5 * double(tie_neg));
    neg_below += tie_neg;
    i = j;
  }
  return concordant / (double(pos) * double(neg));
}

double auroc_trapezoid(const std::vector<uint8_t>& labels, const std::vector<double>& scores) {
  // Independent computation: walk the ROC polygon over descending distinct
  // score cuts and accumulate trapezoids.
  size_t pos = 0;
  for (uint8_t y : labels) pos += y;
  const size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw Error("auroc_trapezoid: both classes must be present");

  std::vector<size_t> idx(labels.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return scores[a] > scores[b]; });
  double area = 0.0;
  double prev_fpr = 0.0, prev_tpr = 0.0;
  size_t tp = 0, fp = 0;
  size_t i = 0;
  while (i < idx.size()) {
    size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] ? tp : fp)++;
      ++j;
    }
    const double tpr = double(tp) / double(pos);
    const double fpr = double(fp) / double(neg);
    area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
    prev_fpr = fpr;
    prev_tpr = tpr;
    i = j;
  }
  return area;
}

std::vector<double> threshold_candidates(const std::vector<double>& scores) {
  std::vector<double> distinct = scores;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<double> cuts;
  if (distinct.empty()) return {0.5};
  // Finite sentinels below and above the score support classify exactly
  // like -inf/+inf would and stay serialisable.
  cuts.push_back(distinct.front() - 1.0);
  for (size_t i = 0; i + 1 < distinct.size(); ++i)
    cuts.push_back((distinct[i] + distinct[i + 1]) / 2.0);
  cuts.push_back(distinct.back() + 1.0);
  return cuts;
}

double pick_threshold(const std::vector<uint8_t>& labels, const std::vector<double>& scores,
                      double r) {
  if (!(r > 0.0)) throw Error("pick_threshold: r must be positive");
  size_t pos = 0;
  for (uint8_t y : labels) pos += y;
  if (pos == 0 || pos == labels.size())
    throw Error("pick_threshold: both classes must be present");

  double best_obj = -1.0, best_se = -1.0, best_cut = 0.0;
  for (double cut : threshold_candidates(scores)) {
    const ConfusionMatrix cm = confusion(labels, scores, cut);
    const double se = double(cm.tp) / double(cm.tp + cm.fn);
    const double sp = double(cm.tn) / double(cm.tn + cm.fp);
    const double obj = se + r * sp;
    const bool better = obj > best_obj + 1e-12 ||
                        (obj > best_obj - 1e-12 &&
                         (se > best_se + 1e-12 ||
                          (se > best_se - 1e-12 && cut < best_cut)));
    if (better) {
      best_obj = obj;
      best_se = se;
      best_cut = cut;
    }
  }
  return best_cut;
}

void write_roc_csv(const std::vector<uint8_t>& labels, const std::vector<double>& scores,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "threshold,se,sp\n";
  for (double cut : threshold_candidates(scores)) {
    const auto r = metrics(confusion(labels, scores, cut));
    out << format_double(cut) << ',' << format_double(r.se.value_or(0.0)) << ','
        << format_double(r.sp.value_or(0.0)) << '\n';
  }
}

void write_pr_csv(const std::vector<uint8_t>& labels, const std::vector<double>& scores,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "threshold,precision,recall\n";
  for (double cut : threshold_candidates(scores)) {
    const auto r = metrics(confusion(labels, scores, cut));
    if (!r.p) continue;  // no positive predictions at this cut
    out << format_double(cut) << ',' << format_double(*r.p) << ','
        << format_double(r.se.value_or(0.0)) << '\n';
  }
}

namespace {

ordered_json optional_json(const std::optional<double>& v) {
  if (v) return *v;
  return nullptr;
}

ordered_json report_to_json(const MetricsReport& r) {
  ordered_json j;
  j["se"] = optional_json(r.se);
  j["sp"] = optional_json(r.sp);
  j["p"] = optional_json(r.p);
  j["hm"] = optional_json(r.hm);
  j["acc"] = optional_json(r.acc);
  j["auroc"] = optional_json(r.auroc);
  j["threshold"] = r.threshold;
  j["confusion"] = {{"tp", r.confusion.tp},
                    {"fp", r.confusion.fp},
                    {"tn", r.confusion.tn},
                    {"fn", r.confusion.fn}};
  return j;
}

}  // namespace

std::string metrics_report_json(const MetricsReport& report) {
  return report_to_json(report).dump(2) + "\n";
}

// ---- grid search -----------------------------------------------------------

MethodSpec parse_method(const std::string& name) {
  MethodSpec spec;
  std::string rest = name;
  auto eat = [&](const std::string& prefix) {
    if (rest.rfind(prefix, 0) == 0) {
      rest = rest.substr(prefix.size());
      return true;
    }
    return false;
  };
  spec.kf = eat("kf-");
  spec.rose = eat("rose-");
  if (rest == "lr1") spec.family = ModelFamily::LR1;
  else if (rest == "lr6") spec.family = ModelFamily::LR6;
  else if (rest == "en" || rest == "elastic-net") spec.family = ModelFamily::ElasticNet;
  else if (rest == "svm") spec.family = ModelFamily::Svm;
  else if (rest == "rf" || rest == "forest") spec.family = ModelFamily::Forest;
  else if (rest == "xgb" || rest == "boost" || rest == "boosted") spec.family = ModelFamily::Boosted;
  else throw Error("unknown method '" + name + "'");
  if ((spec.family == ModelFamily::LR1 || spec.family == ModelFamily::LR6) && spec.rose)
    throw Error("ROSE cannot precede " + rest +
                ": synthetic rows carry no raw case vectors for Jaccard summaries");
  return spec;
}

std::string method_name(const MethodSpec& method) {
  std::string out;
  if (method.kf) out += "kf-";
  if (method.rose) out += "rose-";
  switch (method.family) {
    case ModelFamily::LR1: out += "lr1"; break;
    case ModelFamily::LR6: out += "lr6"; break;
    case ModelFamily::ElasticNet: out += "en"; break;
    case ModelFamily::Svm: out += "svm"; break;
    case ModelFamily::Forest: out += "rf"; break;
    case ModelFamily::Boosted: out += "xgb"; break;
  }
  return out;
}

namespace {

std::vector<std::map<std::string, double>> enumerate_cells(
    const std::map<std::string, std::vector<double>>& ladders) {
  for (const auto& [key, ladder] : ladders)
    if (ladder.empty()) throw Error("grid ladder '" + key + "' is empty");
  std::vector<std::map<std::string, double>> cells = {{}};
  for (const auto& [key, ladder] : ladders) {
    std::vector<std::map<std::string, double>> next;
    next.reserve(cells.size() * ladder.size());
    for (const auto& cell : cells) {
      for (double v : ladder) {
        auto c = cell;
        c[key] = v;
        next.push_back(std::move(c));
      }
    }
    cells = std::move(next);
  }
  return cells;
}

}  // namespace

std::vector<GridResult> grid_search(const GridSpec& spec, const PairwiseDataset& train,
                                    const PairwiseDataset& eval, const Codebook* codebook) {
  if (spec.ladders.empty()) throw Error("grid_search: empty grid");
  const auto cells = enumerate_cells(spec.ladders);
  const auto eval_labels = labels01(eval);

  std::vector<GridResult> results(cells.size());
  std::vector<std::string> failures(cells.size());
  auto run_cell = [&](size_t i) {
    try {
      const uint64_t cell_seed = derive_seed(spec.master_seed, "grid-cell", i);
      GridResult res;
      res.cell_index = i;
      res.params = cells[i];
      TrainedModel model = train_pipeline(spec.method, cells[i], train, codebook, cell_seed);
      const auto scores = predict(model, eval);
      res.threshold = spec.paper_mode
                          ? pick_threshold(eval_labels, scores, spec.r)
                          : cv_threshold(spec.method, cells[i], train, codebook, spec.r,
                                         cell_seed, spec.cv_folds);
      res.report = metrics(confusion(eval_labels, scores, res.threshold));
      res.report.threshold = res.threshold;
      res.report.auroc = auroc(eval_labels, scores);
      results[i] = std::move(res);
    } catch (const std::exception& e) {
      failures[i] = e.what();
    }
  };

  const size_t threads = std::max<size_t>(1, spec.threads);
  if (threads == 1 || cells.size() == 1) {
    for (size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<size_t> next{0};
    for (size_t t = 0; t < std::min(threads, cells.size()); ++t)
      pool.emplace_back([&]() {
        for (size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) run_cell(i);
      });
    for (auto& th : pool) th.join();
  }
  for (size_t i = 0; i < cells.size(); ++i)
    if (!failures[i].empty())
      throw Error("grid cell " + std::to_string(i) + " failed: " + failures[i]);

  std::sort(results.begin(), results.end(), [](const GridResult& a, const GridResult& b) {
    const double se_a = a.report.se.value_or(-1.0), se_b = b.report.se.value_or(-1.0);
    if (se_a != se_b) return se_a > se_b;
    const double sp_a = a.report.sp.value_or(-1.0), sp_b = b.report.sp.value_or(-1.0);
    if (sp_a != sp_b) return sp_a > sp_b;
    return a.params < b.params;  // lexicographic over key-sorted maps
  });
  return results;
}

std::string grid_results_json(const std::vector<GridResult>& results) {
  ordered_json arr = ordered_json::array();
  for (const auto& r : results) {
    ordered_json j;
    j["cell_index"] = r.cell_index;
    j["params"] = r.params;
    j["threshold"] = r.threshold;
    j["metrics"] = report_to_json(r.report);
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

}  // namespace linkage
