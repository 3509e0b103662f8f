#include "linkage/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "linkage/csv.hpp"
#include "linkage/explain.hpp"
#include "linkage/pipeline.hpp"
#include "linkage/resampling.hpp"
#include "linkage/rng.hpp"
#include "linkage/sha256.hpp"

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace linkage {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error("config: '" + key + "' must be a boolean, got '" + v + "'");
}

double parse_num(const std::string& v, const std::string& key) {
  try {
    size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error("config: '" + key + "' must be numeric, got '" + v + "'");
  }
}

std::vector<double> parse_list(const std::string& v, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_num(item, key));
  }
  if (out.empty()) throw Error("config: '" + key + "' must list at least one value");
  return out;
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path);
  std::map<std::string, std::string> kv;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(path + ":" + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(path + ":" + std::to_string(line_no) + ": empty key");
    kv[key] = value;
  }
  return kv;
}

PipelineConfig PipelineConfig::from_file(const std::string& path) {
  return parse(read_config_file(path));
}

PipelineConfig PipelineConfig::parse(const std::map<std::string, std::string>& kv) {
  PipelineConfig c;
  if (kv.count("cases")) c.use_synth = false;
  for (const auto& [key, value] : kv) {
    if (key == "synth") c.use_synth = parse_bool(value, key);
    else if (key == "synth.n_suspects") c.synth.n_suspects = size_t(parse_num(value, key));
    else if (key == "synth.histogram") {
      c.synth.victims_per_suspect.clear();
      for (double v : parse_list(value, key)) c.synth.victims_per_suspect.push_back(size_t(v));
      c.synth.n_suspects = c.synth.victims_per_suspect.size();
    } else if (key == "synth.mean_victims") c.synth.geometric_mean_victims = parse_num(value, key);
    else if (key == "synth.n_features") c.synth.n_features = size_t(parse_num(value, key));
    else if (key == "synth.signature_density") c.synth.signature_density = parse_num(value, key);
    else if (key == "synth.noise_flip") c.synth.noise_flip = parse_num(value, key);
    else if (key == "synth.missing_rate") c.synth.missing_rate = parse_num(value, key);
    else if (key == "synth.unknown_suspects") c.synth_unknown_suspects = size_t(parse_num(value, key));
    else if (key == "synth.unknown_mean_victims") c.synth_unknown_mean_victims = parse_num(value, key);
    else if (key == "cases") { c.cases_path = value; c.use_synth = false; }
    else if (key == "codebook") c.codebook_path = value;
    else if (key == "linkage") c.linkage_path = value;
    else if (key == "unknown_cases") c.unknown_cases_path = value;
    else if (key == "missing_threshold") c.missing_threshold = parse_num(value, key);
    else if (key == "exempt") {
      std::stringstream ss(value);
      std::string item;
      while (std::getline(ss, item, ';'))
        if (!trim(item).empty()) c.exempt.insert(trim(item));
    }
    else if (key == "train_fraction") c.train_fraction = parse_num(value, key);
    else if (key == "stratified") c.stratified = parse_bool(value, key);
    else if (key == "method") c.method = parse_method(value);
    else if (key.rfind("param.", 0) == 0) c.params[key.substr(6)] = parse_num(value, key);
    else if (key.rfind("grid.", 0) == 0) c.ladders[key.substr(5)] = parse_list(value, key);
    else if (key == "fn_cost") c.fn_cost = parse_num(value, key);
    else if (key == "fp_cost") c.fp_cost = parse_num(value, key);
    else if (key == "prevalence") {
      if (value != "auto") c.prevalence = parse_num(value, key);
    }
    else if (key == "paper_mode") c.paper_mode = parse_bool(value, key);
    else if (key == "cv_folds") c.cv_folds = size_t(parse_num(value, key));
    else if (key == "shap") c.shap = parse_bool(value, key);
    else if (key == "shap.background") c.shap_background = size_t(parse_num(value, key));
    else if (key == "shap.instances") c.shap_instances = size_t(parse_num(value, key));
    else if (key == "resolution") c.louvain_resolution = parse_num(value, key);
    else if (key == "compare.method") c.compare_with = parse_method(value);
    else if (key.rfind("compare.param.", 0) == 0)
      c.compare_params[key.substr(14)] = parse_num(value, key);
    else if (key == "median_loss") c.median_loss = parse_num(value, key);
    else if (key == "seed") c.master_seed = uint64_t(parse_num(value, key));
    else if (key == "threads") c.threads = size_t(parse_num(value, key));
    else if (key == "out_dir") c.out_dir = value;
    else throw Error("config: unknown key '" + key + "'");
  }
  if (!c.use_synth && (c.cases_path.empty() || c.codebook_path.empty()))
    throw Error("config: file mode needs 'cases' and 'codebook'");
  return c;
}

// ---- run_experiment ---------------------------------------------------------

namespace {

ordered_json config_echo(const PipelineConfig& c) {
  ordered_json j;
  j["synth"] = c.use_synth;
  if (c.use_synth) {
    j["synth.n_suspects"] = c.synth.n_suspects;
    j["synth.histogram"] = c.synth.victims_per_suspect;
    if (c.synth.geometric_mean_victims) j["synth.mean_victims"] = *c.synth.geometric_mean_victims;
    j["synth.n_features"] = c.synth.n_features;
    j["synth.signature_density"] = c.synth.signature_density;
    j["synth.noise_flip"] = c.synth.noise_flip;
    j["synth.missing_rate"] = c.synth.missing_rate;
    j["synth.unknown_suspects"] = c.synth_unknown_suspects;
    j["synth.unknown_mean_victims"] = c.synth_unknown_mean_victims;
  } else {
    j["cases"] = c.cases_path;
    j["codebook"] = c.codebook_path;
    j["linkage"] = c.linkage_path;
    if (!c.unknown_cases_path.empty()) j["unknown_cases"] = c.unknown_cases_path;
  }
  j["missing_threshold"] = c.missing_threshold;
  j["exempt"] = std::vector<std::string>(c.exempt.begin(), c.exempt.end());
  j["train_fraction"] = c.train_fraction;
  j["stratified"] = c.stratified;
  j["method"] = method_name(c.method);
  j["params"] = c.params;
  j["grid"] = c.ladders;
  j["fn_cost"] = c.fn_cost;
  j["fp_cost"] = c.fp_cost;
  j["prevalence"] = c.prevalence ? ordered_json(*c.prevalence) : ordered_json("auto");
  j["paper_mode"] = c.paper_mode;
  j["cv_folds"] = c.cv_folds;
  j["shap"] = c.shap;
  if (c.shap) {
    j["shap.background"] = c.shap_background;
    j["shap.instances"] = c.shap_instances;
  }
  j["resolution"] = c.louvain_resolution;
  if (c.compare_with) {
    j["compare.method"] = method_name(*c.compare_with);
    j["compare.params"] = c.compare_params;
  }
  j["median_loss"] = c.median_loss;
  j["seed"] = c.master_seed;
  j["threads"] = c.threads;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

/// Union-find over test-set nodes, used for suspect accounting.
struct Components {
  std::map<std::string, std::string> parent;
  std::string find(const std::string& x) {
    auto it = parent.find(x);
    if (it == parent.end()) {
      parent[x] = x;
      return x;
    }
    if (it->second == x) return x;
    const std::string root = find(it->second);
    parent[x] = root;
    return root;
  }
  void unite(const std::string& a, const std::string& b) { parent[find(a)] = find(b); }
};

PairwiseDataset subsample_rows(const PairwiseDataset& data, size_t limit, uint64_t seed) {
  if (data.rows.size() <= limit) return data;
  std::vector<size_t> idx(data.rows.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(seed);
  seeded_shuffle(idx, rng);
  idx.resize(limit);
  std::sort(idx.begin(), idx.end());
  PairwiseDataset out;
  out.feature_names = data.feature_names;
  out.case_vectors = data.case_vectors;
  for (size_t i : idx) out.rows.push_back(data.rows[i]);
  return out;
}

/// Fig-2-style DOT: true links green when predicted, red when missed;
/// false predictions among the same nodes dashed grey.
void write_test_network_dot(const PairwiseDataset& test, const std::vector<double>& scores,
                            double threshold, const fs::path& path) {
  std::set<std::string> linked_nodes;
  for (const auto& row : test.rows)
    if (row.label == PairLabel::Linked) {
      linked_nodes.insert(row.a);
      linked_nodes.insert(row.b);
    }
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "graph test_links {\n  node [style=filled fillcolor=white];\n";
  for (const auto& n : linked_nodes) out << "  \"" << n << "\";\n";
  for (size_t i = 0; i < test.rows.size(); ++i) {
    const auto& row = test.rows[i];
    const bool predicted = scores[i] >= threshold;
    if (row.label == PairLabel::Linked) {
      out << "  \"" << row.a << "\" -- \"" << row.b << "\" [color="
          << (predicted ? "green" : "red") << "];\n";
    } else if (predicted && linked_nodes.count(row.a) && linked_nodes.count(row.b)) {
      out << "  \"" << row.a << "\" -- \"" << row.b << "\" [color=grey style=dashed];\n";
    }
  }
  out << "}\n";
}

}  // namespace

size_t true_suspects(const PairwiseDataset& test) {
  Components comp;
  std::set<std::string> nodes;
  for (const auto& row : test.rows)
    if (row.label == PairLabel::Linked) {
      nodes.insert(row.a);
      nodes.insert(row.b);
      comp.unite(row.a, row.b);
    }
  std::set<std::string> roots;
  for (const auto& n : nodes) roots.insert(comp.find(n));
  return roots.size();
}

size_t identified_suspects(const PairwiseDataset& test, const std::vector<double>& scores,
                           double threshold) {
  if (scores.size() != test.rows.size())
    throw Error("identified_suspects: scores not aligned");
  Components comp;
  std::set<std::string> truly_linked;
  for (const auto& row : test.rows)
    if (row.label == PairLabel::Linked) {
      truly_linked.insert(row.a);
      truly_linked.insert(row.b);
    }
  for (size_t i = 0; i < test.rows.size(); ++i) {
    const auto& row = test.rows[i];
    if (row.label == PairLabel::Linked && scores[i] >= threshold)
      comp.unite(row.a, row.b);
  }
  std::map<std::string, size_t> size_of;
  for (const auto& n : truly_linked)
    if (comp.parent.count(n)) size_of[comp.find(n)]++;
  size_t identified = 0;
  for (const auto& [root, size] : size_of) {
    (void)root;
    if (size >= 2) ++identified;
  }
  return identified;
}

UnknownPrediction predict_unknown(const PipelineConfig& config, const TrainedModel& model,
                                  double threshold, const CaseTable& unknown_cases) {
  CaseTable conformed = conform_to_features(unknown_cases, model_feature_names(model));
  if (conformed.missing_count() > 0)
    conformed = impute(conformed, derive_seed(config.master_seed, "unknown-impute"));
  PairwiseDataset pairs = build_pairs(conformed, nullptr);
  const auto scores = predict(model, pairs);
  UnknownPrediction out;
  out.graph = build_graph(pairs, scores, threshold);
  out.predicted_links = out.graph.edges.size();
  out.partition = louvain(out.graph, config.louvain_resolution,
                          derive_seed(config.master_seed, "louvain"));
  out.prevalence_table = prevalence(out.partition);
  return out;
}

ExperimentReport run_experiment(const PipelineConfig& config) {
  const fs::path dir(config.out_dir);
  fs::create_directories(dir);

  ExperimentReport report;
  std::vector<std::string> outputs;
  auto emit = [&](const std::string& rel, const std::string& text) {
    write_text(dir / rel, text);
    outputs.push_back(rel);
  };

  // ---- data ----
  CaseTable raw;
  Codebook codebook;
  LinkageRegister reg;
  std::optional<CaseTable> unknown_raw;
  if (config.use_synth) {
    SynthConfig synth = config.synth;
    synth.seed = derive_seed(config.master_seed, "synth-solved");
    if (synth.victims_per_suspect.empty() && !synth.geometric_mean_victims &&
        synth.n_suspects == 17)
      synth.victims_per_suspect = solved_style_histogram();
    auto [table, reg_] = generate(synth);
    raw = std::move(table);
    reg = std::move(reg_);
    codebook = synth_codebook(synth.n_features);
    fs::create_directories(dir / "data");
    write_cases_csv(raw, (dir / "data/cases.csv").string());
    write_codebook_csv(codebook, (dir / "data/codebook.csv").string());
    write_linkage_csv(reg, (dir / "data/linkage.csv").string());
    outputs.insert(outputs.end(), {"data/cases.csv", "data/codebook.csv", "data/linkage.csv"});
    if (config.synth_unknown_suspects > 0) {
      SynthConfig us = config.synth;
      us.seed = derive_seed(config.master_seed, "synth-unknown");
      us.n_suspects = config.synth_unknown_suspects;
      us.victims_per_suspect.clear();
      us.geometric_mean_victims = config.synth_unknown_mean_victims;
      auto [utable, ureg] = generate(us);
      (void)ureg;  // ground truth withheld: these cases are "unsolved"
      unknown_raw = std::move(utable);
      write_cases_csv(*unknown_raw, (dir / "data/unknown_cases.csv").string());
      outputs.push_back("data/unknown_cases.csv");
    }
  } else {
    auto [table, cb] = load_cases(config.cases_path, config.codebook_path);
    raw = std::move(table);
    codebook = std::move(cb);
    if (!config.linkage_path.empty()) reg = load_linkage(config.linkage_path, raw);
    if (!config.unknown_cases_path.empty()) {
      auto [utable, ucb] = load_cases(config.unknown_cases_path, config.codebook_path);
      (void)ucb;
      unknown_raw = std::move(utable);
    }
  }
  if (reg.pairs.empty()) throw Error("run_experiment: a linkage register is required");

  // ---- preprocess ----
  auto [dropped, rep1] = drop_homogeneous(raw);
  auto [kept, rep2] = apply_missingness_policy(dropped, config.missing_threshold, config.exempt);
  PreprocessReport prep = merge_reports(rep1, rep2);
  prep.imputed_cells = kept.missing_count();
  const uint64_t impute_seed = derive_seed(config.master_seed, "impute");
  CaseTable cases = impute(kept, impute_seed);
  Codebook working_codebook = codebook.restricted_to(cases.feature_names);
  emit("preprocess_report.json", preprocess_report_json(prep));

  // ---- pairs and split ----
  PairwiseDataset pairs = build_pairs(cases, &reg);
  write_pairs_csv(pairs, (dir / "pairs.csv").string());
  outputs.push_back("pairs.csv");
  SplitResult parts =
      split(pairs, config.train_fraction, derive_seed(config.master_seed, "split"),
            config.stratified);

  // ---- cost weight ----
  CostSpec cost;
  cost.fn_cost = config.fn_cost;
  cost.fp_cost = config.fp_cost;
  if (config.prevalence) {
    cost.prevalence = *config.prevalence;
  } else {
    const double linked = double(parts.train.count(PairLabel::Linked));
    cost.prevalence = linked / double(parts.train.rows.size());
  }
  const double r = cost_weight(cost);
  report.r = r;

  // ---- optional grid ----
  std::map<std::string, double> chosen = config.params;
  if (!config.ladders.empty()) {
    GridSpec grid;
    grid.method = config.method;
    grid.ladders = config.ladders;
    for (const auto& [k, v] : config.params)
      if (!grid.ladders.count(k)) grid.ladders[k] = {v};
    grid.master_seed = derive_seed(config.master_seed, "grid");
    grid.r = r;
    grid.paper_mode = config.paper_mode;
    grid.cv_folds = config.cv_folds;
    grid.threads = config.threads;
    const auto results = grid_search(grid, parts.train, parts.test, &working_codebook);
    emit("grid_rankings.json", grid_results_json(results));
    chosen = results.front().params;
  }
  report.chosen_params = chosen;

  // ---- final model, threshold, evaluation ----
  const uint64_t model_seed = derive_seed(config.master_seed, "model");
  TrainedModel model = train_pipeline(config.method, chosen, parts.train, &working_codebook,
                                      model_seed);
  emit("model.json", model_to_json(model));

  const auto test_scores = predict(model, parts.test);
  const auto test_labels = labels01(parts.test);
  const double threshold =
      config.paper_mode
          ? pick_threshold(test_labels, test_scores, r)
          : cv_threshold(config.method, chosen, parts.train, &working_codebook, r, model_seed,
                         config.cv_folds);
  report.threshold = threshold;

  MetricsReport test_metrics = metrics(confusion(test_labels, test_scores, threshold));
  test_metrics.threshold = threshold;
  test_metrics.auroc = auroc(test_labels, test_scores);
  report.test_metrics = test_metrics;
  emit("metrics.json", metrics_report_json(test_metrics));
  write_roc_csv(test_labels, test_scores, (dir / "roc.csv").string());
  outputs.push_back("roc.csv");
  write_pr_csv(test_labels, test_scores, (dir / "pr.csv").string());
  outputs.push_back("pr.csv");

  // ---- SHAP ----
  if (config.shap) {
    const PairwiseDataset background = subsample_rows(
        parts.train, config.shap_background, derive_seed(config.master_seed, "shap-background"));
    const PairwiseDataset explained = subsample_rows(
        parts.test, config.shap_instances, derive_seed(config.master_seed, "shap-instances"));
    GlobalShap shap = global_shap(model, explained, background,
                                  derive_seed(config.master_seed, "shap"));
    write_shap_csv(shap, (dir / "shap.csv").string());
    outputs.push_back("shap.csv");
  }

  // ---- comparison mode ----
  if (config.compare_with) {
    TrainedModel alt = train_pipeline(*config.compare_with, config.compare_params, parts.train,
                                      &working_codebook, model_seed);
    const auto alt_scores = predict(alt, parts.test);
    const double alt_threshold =
        config.paper_mode
            ? pick_threshold(test_labels, alt_scores, r)
            : cv_threshold(*config.compare_with, config.compare_params, parts.train,
                           &working_codebook, r, model_seed, config.cv_folds);
    MetricsReport alt_metrics = metrics(confusion(test_labels, alt_scores, alt_threshold));
    alt_metrics.threshold = alt_threshold;
    alt_metrics.auroc = auroc(test_labels, alt_scores);

    const size_t total = true_suspects(parts.test);
    const size_t ours = identified_suspects(parts.test, test_scores, threshold);
    const size_t theirs = identified_suspects(parts.test, alt_scores, alt_threshold);
    ordered_json cmp;
    cmp["method"] = method_name(config.method);
    cmp["baseline"] = method_name(*config.compare_with);
    cmp["true_suspects"] = total;
    cmp["identified"] = {{method_name(config.method), ours},
                         {method_name(*config.compare_with), theirs}};
    cmp["savings_estimate"] = savings_estimate(ours, theirs, config.median_loss);
    cmp["metrics"] = {{method_name(config.method),
                       ordered_json::parse(metrics_report_json(test_metrics))},
                      {method_name(*config.compare_with),
                       ordered_json::parse(metrics_report_json(alt_metrics))}};
    emit("comparison.json", cmp.dump(2) + "\n");
    write_test_network_dot(parts.test, test_scores, threshold, dir / "test_links_method.dot");
    write_test_network_dot(parts.test, alt_scores, alt_threshold,
                           dir / "test_links_baseline.dot");
    outputs.insert(outputs.end(), {"test_links_method.dot", "test_links_baseline.dot"});
  }

  // ---- unknown-linkage prediction ----
  if (unknown_raw) {
    UnknownPrediction up = predict_unknown(config, model, threshold, *unknown_raw);
    write_edges_csv(up.graph, (dir / "unknown_edges.csv").string());
    write_dot(up.graph, &up.partition, (dir / "unknown_graph.dot").string());
    write_prevalence_csv(up.prevalence_table, (dir / "unknown_prevalence.csv").string());
    emit("unknown_prevalence.json", prevalence_json(up.prevalence_table));
    ordered_json summary;
    summary["cases"] = up.graph.nodes.size();
    summary["possible_pairs"] = up.graph.nodes.size() * (up.graph.nodes.size() - 1) / 2;
    summary["predicted_links"] = up.predicted_links;
    summary["communities"] = up.prevalence_table.rows.empty()
                                 ? 0
                                 : [&] {
                                     size_t n = 0;
                                     for (const auto& [v, s] : up.prevalence_table.rows) {
                                       (void)v;
                                       n += s;
                                     }
                                     return n;
                                   }();
    summary["modularity"] = up.partition.modularity;
    summary["resolution"] = up.partition.resolution;
    emit("unknown_summary.json", summary.dump(2) + "\n");
    outputs.insert(outputs.end(),
                   {"unknown_edges.csv", "unknown_graph.dot", "unknown_prevalence.csv"});
  }

  // ---- manifest ----
  ordered_json manifest;
  manifest["tool"] = "linkage";
  manifest["config"] = config_echo(config);
  manifest["cost_weight_r"] = r;
  manifest["threshold"] = threshold;
  manifest["chosen_params"] = chosen;
  auto& seeds = manifest["seeds"];
  seeds["master"] = config.master_seed;
  seeds["impute"] = impute_seed;
  seeds["split"] = derive_seed(config.master_seed, "split");
  seeds["model"] = model_seed;
  seeds["grid"] = derive_seed(config.master_seed, "grid");
  seeds["louvain"] = derive_seed(config.master_seed, "louvain");
  std::sort(outputs.begin(), outputs.end());
  auto& files = manifest["outputs"] = ordered_json::array();
  for (const auto& rel : outputs) {
    const fs::path p = dir / rel;
    files.push_back({{"path", rel},
                     {"sha256", sha256_file(p.string())},
                     {"bytes", fs::file_size(p)}});
  }
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  report.manifest_path = (dir / "manifest.json").string();
  report.outputs = outputs;
  return report;
}

}  // namespace linkage
