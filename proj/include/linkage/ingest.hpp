#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "linkage/error.hpp"

namespace linkage {

enum class FeatureCategory {
  Victim,
  Suspect,
  Temporal,
  InitialApproach,
  FollowOnContact,
  Maintenance,
  Extortion,
  Closure,
};

FeatureCategory parse_category(const std::string& s);
std::string to_string(FeatureCategory c);

struct CodebookEntry {
  std::string feature_name;
  FeatureCategory category = FeatureCategory::Victim;
  std::optional<int> lr_group;
};

struct Codebook {
  std::vector<CodebookEntry> entries;

  /// Group id -> ascending column indices. Throws if a declared group ends
  /// up with zero columns (cannot happen for codebooks built by load, but
  /// restricted codebooks are validated again before use).
  std::map<int, std::vector<size_t>> groups() const;
  std::optional<size_t> index_of(const std::string& name) const;
  /// Keeps only the named features, preserving the given order.
  Codebook restricted_to(const std::vector<std::string>& names) const;
  void validate() const;
};

/// Cell values are 0, 1 or missing.
constexpr int8_t kMissingCell = -1;

struct CaseTable {
  std::vector<std::string> case_ids;
  std::vector<std::string> feature_names;
  std::vector<int8_t> cells;  // row-major, n_cases x n_features

  size_t n_cases() const { return case_ids.size(); }
  size_t n_features() const { return feature_names.size(); }
  int8_t at(size_t row, size_t col) const { return cells[row * feature_names.size() + col]; }
  int8_t& at(size_t row, size_t col) { return cells[row * feature_names.size() + col]; }
  size_t missing_count() const;
};

/// The solved-case register: which suspect committed each case.
struct LinkageRegister {
  std::vector<std::pair<std::string, std::string>> pairs;  // (case_id, suspect_id)

  std::optional<std::string> suspect_of(const std::string& case_id) const;
  void validate_against(const CaseTable& table) const;
};

struct PreprocessReport {
  std::vector<std::string> dropped_homogeneous;
  std::vector<std::pair<std::string, double>> dropped_missing;  // (name, missing fraction)
  size_t imputed_cells = 0;
  size_t retained_features = 0;
};

/// Folds a later-stage report into an earlier one so a whole preprocessing
/// run is summarised by a single report.
PreprocessReport merge_reports(const PreprocessReport& first, const PreprocessReport& second);
std::string preprocess_report_json(const PreprocessReport& report);

Codebook load_codebook(const std::string& path);
std::pair<CaseTable, Codebook> load_cases(const std::string& cases_path,
                                          const std::string& codebook_path);
LinkageRegister load_linkage(const std::string& path, const CaseTable& table);

/// Removes columns whose observed entries are all 0 or all 1 (missing cells
/// are ignored when judging homogeneity). Errors if nothing survives.
std::pair<CaseTable, PreprocessReport> drop_homogeneous(const CaseTable& table);

/// Removes non-exempt columns with missing fraction above the threshold.
std::pair<CaseTable, PreprocessReport> apply_missingness_policy(
    const CaseTable& table, double threshold, const std::set<std::string>& exempt);

/// Single-draw empirical-frequency Bernoulli imputation per feature, seeded.
/// Observed cells are never altered. Errors on a fully-missing column.
CaseTable impute(const CaseTable& table, uint64_t seed);

/// Selects and reorders columns by name; errors on a missing feature. Used
/// to align an unknown-status table with a trained model's schema.
CaseTable conform_to_features(const CaseTable& table,
                              const std::vector<std::string>& feature_names);

void write_cases_csv(const CaseTable& table, const std::string& path);
void write_codebook_csv(const Codebook& codebook, const std::string& path);
void write_linkage_csv(const LinkageRegister& reg, const std::string& path);

}  // namespace linkage
