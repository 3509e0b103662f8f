#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "linkage/evaluation.hpp"
#include "linkage/network.hpp"
#include "linkage/synth.hpp"

namespace linkage {

/// Everything a run needs, parsed from a key=value config file (see the
/// README for the format). Defaults reproduce the toolkit's reference
/// configuration on synthetic data.
struct PipelineConfig {
  // data: synthetic or files
  bool use_synth = true;
  SynthConfig synth;
  size_t synth_unknown_suspects = 0;
  double synth_unknown_mean_victims = 3.5;
  std::string cases_path, codebook_path, linkage_path, unknown_cases_path;

  // preprocessing
  double missing_threshold = 0.25;
  std::set<std::string> exempt;

  // split
  double train_fraction = 0.8;
  bool stratified = true;

  // method and parameters
  MethodSpec method{ModelFamily::Svm, true, true};  // kf-rose-svm
  std::map<std::string, double> params;
  std::map<std::string, std::vector<double>> ladders;  // non-empty: grid mode

  // cost-specific threshold
  double fn_cost = 1690.0;
  double fp_cost = 1040.0;
  std::optional<double> prevalence;  // unset: estimated from training labels
  bool paper_mode = false;           // threshold picked on the test scores
  size_t cv_folds = 3;

  // explanation
  bool shap = false;
  size_t shap_background = 100;
  size_t shap_instances = 20;

  // unknown-linkage prediction and clustering
  double louvain_resolution = 2.0;

  // comparison mode (side-by-side test-set network report)
  std::optional<MethodSpec> compare_with;
  std::map<std::string, double> compare_params;
  double median_loss = 1690.0;

  uint64_t master_seed = 1;
  size_t threads = 1;
  std::string out_dir = "run";

  static PipelineConfig from_file(const std::string& path);
  static PipelineConfig parse(const std::map<std::string, std::string>& kv);
};

/// Raw key=value file loader ('#' comments, blank lines skipped).
std::map<std::string, std::string> read_config_file(const std::string& path);

struct ExperimentReport {
  std::string manifest_path;
  double threshold = 0.5;
  double r = 1.0;
  MetricsReport test_metrics;
  std::map<std::string, double> chosen_params;
  std::vector<std::string> outputs;  // paths relative to out_dir
};

/// Runs the configured workflow end to end: preprocess, pair, split,
/// optional grid, resample/filter, train, threshold, evaluate, optional
/// SHAP and comparison, optional unknown-case prediction and clustering.
/// Every artifact lands under out_dir with a manifest (seeds, parameters,
/// SHA-256 of each output) at its root.
ExperimentReport run_experiment(const PipelineConfig& config);

struct UnknownPrediction {
  LinkGraph graph;
  Partition partition;
  PrevalenceTable prevalence_table;
  size_t predicted_links = 0;
};

/// Scores all pairs of the unknown-status table with a trained model and
/// the carried-over threshold, then clusters the predicted-link graph.
/// The table is conformed to the model's feature schema first; a mismatch
/// is an error.
UnknownPrediction predict_unknown(const PipelineConfig& config, const TrainedModel& model,
                                  double threshold, const CaseTable& unknown_cases);

/// Clusters identified by a method on a labelled test set: connected
/// components (of size >= 2) of the correctly-predicted-link graph over
/// truly linked nodes.
size_t identified_suspects(const PairwiseDataset& test, const std::vector<double>& scores,
                           double threshold);

/// True clusters in a labelled test set: components of the true-link graph.
size_t true_suspects(const PairwiseDataset& test);

}  // namespace linkage
