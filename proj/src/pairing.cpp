#include "linkage/pairing.hpp"

#include <algorithm>
#include <fstream>

#include "linkage/csv.hpp"

namespace linkage {

size_t PairwiseDataset::count(PairLabel label) const {
  size_t n = 0;
  for (const auto& r : rows) n += (r.label == label);
  return n;
}

std::pair<std::span<const uint8_t>, std::span<const uint8_t>> PairwiseDataset::raw_vectors(
    const PairRow& row) const {
  auto a = case_vectors.find(row.a);
  auto b = case_vectors.find(row.b);
  if (a == case_vectors.end() || b == case_vectors.end())
    throw Error("pair (" + row.a + ", " + row.b +
                ") has no raw case vectors; synthetic rows cannot be summarised");
  return {std::span<const uint8_t>(a->second), std::span<const uint8_t>(b->second)};
}

PairwiseDataset build_pairs(const CaseTable& table, const LinkageRegister* reg) {
  if (table.n_cases() < 2) throw Error("build_pairs: need at least 2 cases");
  if (table.missing_count() > 0)
    throw Error("build_pairs: table still has missing cells; impute first");

  PairwiseDataset data;
  data.feature_names = table.feature_names;

  // Canonical ordering: lexicographic case ids, so output is byte-stable
  // regardless of input row order.
  std::vector<size_t> order(table.n_cases());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](size_t lhs, size_t rhs) {
    return table.case_ids[lhs] < table.case_ids[rhs];
  });

  const size_t p = table.n_features();
  for (size_t r = 0; r < table.n_cases(); ++r) {
    std::vector<uint8_t> vec(p);
    for (size_t c = 0; c < p; ++c) vec[c] = uint8_t(table.at(r, c));
    data.case_vectors[table.case_ids[r]] = std::move(vec);
  }

  data.rows.reserve(table.n_cases() * (table.n_cases() - 1) / 2);
  for (size_t i = 0; i < order.size(); ++i) {
    const auto& va = data.case_vectors.at(table.case_ids[order[i]]);
    for (size_t j = i + 1; j < order.size(); ++j) {
      const auto& vb = data.case_vectors.at(table.case_ids[order[j]]);
      PairRow row;
      row.a = table.case_ids[order[i]];
      row.b = table.case_ids[order[j]];
      row.match.resize(p);
      for (size_t c = 0; c < p; ++c) row.match[c] = (va[c] == vb[c]) ? 1 : 0;
      if (reg) {
        auto sa = reg->suspect_of(row.a);
        auto sb = reg->suspect_of(row.b);
        if (sa && sb)
          row.label = (*sa == *sb) ? PairLabel::Linked : PairLabel::Unlinked;
        else
          row.label = PairLabel::Unknown;
      }
      data.rows.push_back(std::move(row));
    }
  }
  return data;
}

double jaccard(std::span<const uint8_t> a, std::span<const uint8_t> b) {
  if (a.size() != b.size()) throw Error("jaccard: vectors differ in length");
  size_t inter = 0, uni = 0;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i] > 1 || b[i] > 1) throw Error("jaccard: vectors must be binary");
    inter += (a[i] & b[i]);
    uni += (a[i] | b[i]);
  }
  if (uni == 0) return 0.0;  // no recorded behaviours, no similarity evidence
  return double(inter) / double(uni);
}

SimilaritySummary summarize_pair(std::span<const uint8_t> a_features,
                                 std::span<const uint8_t> b_features,
                                 const Codebook& codebook) {
  if (a_features.size() != codebook.entries.size() ||
      b_features.size() != codebook.entries.size())
    throw Error("summarize_pair: vectors not aligned to codebook");
  SimilaritySummary summary;
  summary.overall = jaccard(a_features, b_features);
  for (const auto& [group, cols] : codebook.groups()) {
    if (cols.empty()) throw Error("codebook group " + std::to_string(group) + " is empty");
    std::vector<uint8_t> ga, gb;
    ga.reserve(cols.size());
    gb.reserve(cols.size());
    for (size_t c : cols) {
      ga.push_back(a_features[c]);
      gb.push_back(b_features[c]);
    }
    summary.by_group[group] = jaccard(ga, gb);
  }
  return summary;
}

char label_char(PairLabel label) {
  switch (label) {
    case PairLabel::Unlinked: return '0';
    case PairLabel::Linked: return '1';
    case PairLabel::Unknown: return '?';
  }
  return '?';
}

PairLabel parse_label(const std::string& s) {
  if (s == "0") return PairLabel::Unlinked;
  if (s == "1") return PairLabel::Linked;
  if (s == "?") return PairLabel::Unknown;
  throw Error("pair label must be 0, 1 or ?, got '" + s + "'");
}

void write_pairs_csv(const PairwiseDataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "case_a,case_b,label";
  for (const auto& f : data.feature_names) out << ',' << csv_escape(f);
  out << '\n';
  for (const auto& row : data.rows) {
    out << csv_escape(row.a) << ',' << csv_escape(row.b) << ',' << label_char(row.label);
    for (uint8_t m : row.match) out << ',' << int(m);
    out << '\n';
  }
}

PairwiseDataset read_pairs_csv(const std::string& path) {
  CsvTable csv = read_csv(path);
  if (csv.header.size() < 4 || csv.header[0] != "case_a" || csv.header[1] != "case_b" ||
      csv.header[2] != "label")
    throw Error(path + ": expected header case_a,case_b,label,<features>");
  PairwiseDataset data;
  data.feature_names.assign(csv.header.begin() + 3, csv.header.end());
  size_t row_no = 1;
  for (const auto& row : csv.rows) {
    ++row_no;
    PairRow pr;
    pr.a = row[0];
    pr.b = row[1];
    pr.label = parse_label(row[2]);
    pr.match.reserve(data.n_features());
    for (size_t c = 3; c < row.size(); ++c) {
      if (row[c] == "0") pr.match.push_back(0);
      else if (row[c] == "1") pr.match.push_back(1);
      else
        throw Error(path + ":" + std::to_string(row_no) + ": match cells must be 0 or 1");
    }
    data.rows.push_back(std::move(pr));
  }
  return data;
}

}  // namespace linkage
