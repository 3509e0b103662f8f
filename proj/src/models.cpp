#include <cmath>
#include <fstream>
#include <sstream>

#include "linkage/models.hpp"

#include "json.hpp"

namespace linkage {

namespace {

using nlohmann::ordered_json;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_schema(const std::vector<std::string>& model_names,
                  const std::vector<std::string>& data_names) {
  if (model_names != data_names)
    throw Error("predict: dataset feature schema does not match the model (" +
                std::to_string(data_names.size()) + " vs " +
                std::to_string(model_names.size()) + " features)");
}

double linear_score_row(const LinearModel& m, const PairwiseDataset& pairs,
                        const PairRow& row) {
  double eta = m.intercept;
  switch (m.input_kind) {
    case LinearInputKind::MatchVector:
      for (size_t j = 0; j < m.coefficients.size(); ++j)
        eta += m.coefficients[j] * row.match[j];
      break;
    case LinearInputKind::JaccardOverall: {
      auto [va, vb] = pairs.raw_vectors(row);
      eta += m.coefficients[0] * jaccard(va, vb);
      break;
    }
    case LinearInputKind::JaccardGroups: {
      auto [va, vb] = pairs.raw_vectors(row);
      for (size_t g = 0; g < m.group_cols.size(); ++g) {
        std::vector<uint8_t> ga, gb;
        ga.reserve(m.group_cols[g].size());
        gb.reserve(m.group_cols[g].size());
        for (size_t c : m.group_cols[g]) {
          ga.push_back(va[c]);
          gb.push_back(vb[c]);
        }
        eta += m.coefficients[g] * jaccard(ga, gb);
      }
      break;
    }
  }
  return sigmoid(eta);
}

ordered_json tree_to_json(const Tree& tree) {
  ordered_json nodes = ordered_json::array();
  for (const auto& n : tree)
    nodes.push_back({{"f", n.feature}, {"l", n.left}, {"r", n.right}, {"v", n.value}});
  return nodes;
}

Tree tree_from_json(const ordered_json& nodes) {
  Tree tree;
  for (const auto& n : nodes) {
    TreeNode node;
    node.feature = n.at("f").get<int32_t>();
    node.left = n.at("l").get<int32_t>();
    node.right = n.at("r").get<int32_t>();
    node.value = n.at("v").get<double>();
    tree.push_back(node);
  }
  return tree;
}

}  // namespace

std::vector<double> predict(const TrainedModel& model, const PairwiseDataset& pairs) {
  check_schema(model_feature_names(model), pairs.feature_names);
  std::vector<double> scores;
  scores.reserve(pairs.rows.size());
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    for (const auto& row : pairs.rows) scores.push_back(linear_score_row(*lin, pairs, row));
  } else if (const auto* svm = std::get_if<SvmModel>(&model)) {
    for (double d : svm_decision_values(*svm, pairs))
      scores.push_back(1.0 / (1.0 + std::exp(svm->platt_a * d + svm->platt_b)));
  } else if (const auto* forest = std::get_if<ForestModel>(&model)) {
    for (const auto& row : pairs.rows) {
      double sum = 0.0;
      for (const auto& tree : forest->trees) sum += tree_value(tree, row.match);
      scores.push_back(sum / double(forest->trees.size()));
    }
  } else if (const auto* boost = std::get_if<BoostedModel>(&model)) {
    for (const auto& row : pairs.rows) {
      double margin = boost->base_log_odds;
      for (const auto& tree : boost->trees)
        margin += boost->eta * tree_value(tree, row.match);
      scores.push_back(sigmoid(margin));
    }
  }
  return scores;
}

double score_match_vector(const TrainedModel& model, std::span<const uint8_t> x) {
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    if (lin->input_kind != LinearInputKind::MatchVector)
      throw Error("this model scores Jaccard summaries, not match vectors");
    double eta = lin->intercept;
    for (size_t j = 0; j < lin->coefficients.size(); ++j) eta += lin->coefficients[j] * x[j];
    return sigmoid(eta);
  }
  if (const auto* svm = std::get_if<SvmModel>(&model)) {
    double d = svm->bias;
    for (size_t j = 0; j < svm->weights.size(); ++j) d += svm->weights[j] * x[j];
    return 1.0 / (1.0 + std::exp(svm->platt_a * d + svm->platt_b));
  }
  if (const auto* forest = std::get_if<ForestModel>(&model)) {
    double sum = 0.0;
    for (const auto& tree : forest->trees) sum += tree_value(tree, x);
    return sum / double(forest->trees.size());
  }
  const auto& boost = std::get<BoostedModel>(model);
  double margin = boost.base_log_odds;
  for (const auto& tree : boost.trees) margin += boost.eta * tree_value(tree, x);
  return sigmoid(margin);
}

const std::vector<std::string>& model_feature_names(const TrainedModel& model) {
  return std::visit([](const auto& m) -> const std::vector<std::string>& {
    return m.feature_names;
  }, model);
}

std::string model_family_name(const TrainedModel& model) {
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    switch (lin->input_kind) {
      case LinearInputKind::JaccardOverall: return "lr1";
      case LinearInputKind::JaccardGroups: return "lr6";
      case LinearInputKind::MatchVector: return "elastic_net";
    }
  }
  if (std::holds_alternative<SvmModel>(model)) return "svm";
  if (std::holds_alternative<ForestModel>(model)) return "random_forest";
  return "boosted";
}

std::string model_to_json(const TrainedModel& model) {
  ordered_json j;
  j["family"] = model_family_name(model);
  j["feature_names"] = model_feature_names(model);
  if (const auto* lin = std::get_if<LinearModel>(&model)) {
    j["intercept"] = lin->intercept;
    j["coefficients"] = lin->coefficients;
    j["group_ids"] = lin->group_ids;
    j["group_cols"] = lin->group_cols;
    j["separation_warning"] = lin->separation_warning;
  } else if (const auto* svm = std::get_if<SvmModel>(&model)) {
    j["seed"] = svm->seed;
    j["params"] = {{"c", svm->cost},
                   {"weight_linked", svm->weight_linked},
                   {"weight_unlinked", svm->weight_unlinked}};
    j["weights"] = svm->weights;
    j["bias"] = svm->bias;
    j["platt_a"] = svm->platt_a;
    j["platt_b"] = svm->platt_b;
    j["support_linked"] = svm->support_linked;
    j["support_unlinked"] = svm->support_unlinked;
    j["objective_trace"] = svm->objective_trace;
  } else if (const auto* forest = std::get_if<ForestModel>(&model)) {
    j["seed"] = forest->seed;
    j["params"] = {{"n_trees", forest->n_trees}, {"m_features", forest->m_features}};
    auto& trees = j["trees"] = ordered_json::array();
    for (const auto& t : forest->trees) trees.push_back(tree_to_json(t));
  } else if (const auto* boost = std::get_if<BoostedModel>(&model)) {
    j["seed"] = boost->seed;
    j["params"] = {{"eta", boost->eta},
                   {"rounds", boost->n_rounds},
                   {"depth", boost->max_depth},
                   {"lambda_reg", boost->lambda_reg}};
    j["base_log_odds"] = boost->base_log_odds;
    j["loss_trace"] = boost->loss_trace;
    auto& trees = j["trees"] = ordered_json::array();
    for (const auto& t : boost->trees) trees.push_back(tree_to_json(t));
  }
  return j.dump(2) + "\n";
}

TrainedModel model_from_json(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  const std::string family = j.at("family").get<std::string>();
  const auto names = j.at("feature_names").get<std::vector<std::string>>();
  if (family == "lr1" || family == "lr6" || family == "elastic_net") {
    LinearModel m;
    m.input_kind = family == "lr1"   ? LinearInputKind::JaccardOverall
                   : family == "lr6" ? LinearInputKind::JaccardGroups
                                     : LinearInputKind::MatchVector;
    m.feature_names = names;
    m.intercept = j.at("intercept").get<double>();
    m.coefficients = j.at("coefficients").get<std::vector<double>>();
    m.group_ids = j.at("group_ids").get<std::vector<int>>();
    m.group_cols = j.at("group_cols").get<std::vector<std::vector<size_t>>>();
    m.separation_warning = j.at("separation_warning").get<bool>();
    return m;
  }
  if (family == "svm") {
    SvmModel m;
    m.feature_names = names;
    m.seed = j.at("seed").get<uint64_t>();
    m.cost = j.at("params").at("c").get<double>();
    m.weight_linked = j.at("params").at("weight_linked").get<double>();
    m.weight_unlinked = j.at("params").at("weight_unlinked").get<double>();
    m.weights = j.at("weights").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.platt_a = j.at("platt_a").get<double>();
    m.platt_b = j.at("platt_b").get<double>();
    m.support_linked = j.at("support_linked").get<size_t>();
    m.support_unlinked = j.at("support_unlinked").get<size_t>();
    m.objective_trace = j.at("objective_trace").get<std::vector<double>>();
    return m;
  }
  if (family == "random_forest") {
    ForestModel m;
    m.feature_names = names;
    m.seed = j.at("seed").get<uint64_t>();
    m.n_trees = j.at("params").at("n_trees").get<size_t>();
    m.m_features = j.at("params").at("m_features").get<size_t>();
    for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
    return m;
  }
  if (family == "boosted") {
    BoostedModel m;
    m.feature_names = names;
    m.seed = j.at("seed").get<uint64_t>();
    m.eta = j.at("params").at("eta").get<double>();
    m.n_rounds = j.at("params").at("rounds").get<size_t>();
    m.max_depth = j.at("params").at("depth").get<size_t>();
    m.lambda_reg = j.at("params").at("lambda_reg").get<double>();
    m.base_log_odds = j.at("base_log_odds").get<double>();
    m.loss_trace = j.at("loss_trace").get<std::vector<double>>();
    for (const auto& t : j.at("trees")) m.trees.push_back(tree_from_json(t));
    return m;
  }
  throw Error("unknown model family '" + family + "'");
}

void write_model(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << model_to_json(model);
}

TrainedModel read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace linkage
