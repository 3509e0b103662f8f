#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "linkage/ingest.hpp"

namespace linkage {

enum class PairLabel : uint8_t { Unlinked = 0, Linked = 1, Unknown = 2 };

struct PairRow {
  std::string a;  // a < b under lexicographic case-id order; empty for synthetic rows
  std::string b;
  std::vector<uint8_t> match;  // 1 where the two cases' values agree
  PairLabel label = PairLabel::Unknown;
};

/// One row per unordered pair of cases. `case_vectors` snapshots the source
/// case vectors so Jaccard summaries can be recomputed later; synthetic rows
/// produced by resampling have no entry there.
struct PairwiseDataset {
  std::vector<std::string> feature_names;
  std::vector<PairRow> rows;
  std::map<std::string, std::vector<uint8_t>> case_vectors;

  size_t n_features() const { return feature_names.size(); }
  size_t count(PairLabel label) const;
  /// Raw case vectors of a row's two cases; throws for synthetic rows.
  std::pair<std::span<const uint8_t>, std::span<const uint8_t>> raw_vectors(
      const PairRow& row) const;
};

/// Builds all n(n-1)/2 pairs from an imputed table. With a register, labels
/// are Linked iff both cases share a suspect, Unlinked iff both are in the
/// register with different suspects, Unknown otherwise.
PairwiseDataset build_pairs(const CaseTable& table,
                            const LinkageRegister* reg = nullptr);

/// |A and B| / |A or B| over binary vectors; joint absences are ignored.
/// Two all-zero vectors are defined to have similarity 0.
double jaccard(std::span<const uint8_t> a, std::span<const uint8_t> b);

struct SimilaritySummary {
  double overall = 0.0;
  std::map<int, double> by_group;
};

/// Overall Jaccard plus one Jaccard per lr_group, all on the raw case
/// vectors restricted to the group's columns.
SimilaritySummary summarize_pair(std::span<const uint8_t> a_features,
                                 std::span<const uint8_t> b_features,
                                 const Codebook& codebook);

char label_char(PairLabel label);
PairLabel parse_label(const std::string& s);

void write_pairs_csv(const PairwiseDataset& data, const std::string& path);
PairwiseDataset read_pairs_csv(const std::string& path);

}  // namespace linkage
