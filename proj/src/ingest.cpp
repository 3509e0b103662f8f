#include "linkage/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "linkage/csv.hpp"
#include "linkage/rng.hpp"

#include "json.hpp"

namespace linkage {

namespace {

const std::pair<const char*, FeatureCategory> kCategoryNames[] = {
    {"Victim", FeatureCategory::Victim},
    {"Suspect", FeatureCategory::Suspect},
    {"Temporal", FeatureCategory::Temporal},
    {"InitialApproach", FeatureCategory::InitialApproach},
    {"FollowOnContact", FeatureCategory::FollowOnContact},
    {"Maintenance", FeatureCategory::Maintenance},
    {"Extortion", FeatureCategory::Extortion},
    {"Closure", FeatureCategory::Closure},
};

}  // namespace

FeatureCategory parse_category(const std::string& s) {
  for (const auto& [name, cat] : kCategoryNames)
    if (s == name) return cat;
  throw Error("unknown feature category: '" + s + "'");
}

std::string to_string(FeatureCategory c) {
  for (const auto& [name, cat] : kCategoryNames)
    if (cat == c) return name;
  return "?";
}

std::map<int, std::vector<size_t>> Codebook::groups() const {
  std::map<int, std::vector<size_t>> out;
  for (size_t i = 0; i < entries.size(); ++i)
    if (entries[i].lr_group) out[*entries[i].lr_group].push_back(i);
  return out;
}

std::optional<size_t> Codebook::index_of(const std::string& name) const {
  for (size_t i = 0; i < entries.size(); ++i)
    if (entries[i].feature_name == name) return i;
  return std::nullopt;
}

Codebook Codebook::restricted_to(const std::vector<std::string>& names) const {
  Codebook out;
  for (const auto& name : names) {
    auto idx = index_of(name);
    if (!idx) throw Error("codebook has no feature named '" + name + "'");
    out.entries.push_back(entries[*idx]);
  }
  return out;
}

void Codebook::validate() const {
  std::unordered_set<std::string> seen;
  for (const auto& e : entries) {
    if (!seen.insert(e.feature_name).second)
      throw Error("duplicate feature name in codebook: '" + e.feature_name + "'");
  }
}

size_t CaseTable::missing_count() const {
  size_t n = 0;
  for (int8_t c : cells)
    if (c == kMissingCell) ++n;
  return n;
}

std::optional<std::string> LinkageRegister::suspect_of(const std::string& case_id) const {
  for (const auto& [c, s] : pairs)
    if (c == case_id) return s;
  return std::nullopt;
}

void LinkageRegister::validate_against(const CaseTable& table) const {
  std::unordered_set<std::string> ids(table.case_ids.begin(), table.case_ids.end());
  std::unordered_set<std::string> seen;
  for (const auto& [c, s] : pairs) {
    if (!seen.insert(c).second)
      throw Error("linkage register lists case '" + c + "' more than once");
    if (!ids.count(c))
      throw Error("linkage register names unknown case '" + c + "'");
    (void)s;
  }
}

Codebook load_codebook(const std::string& path) {
  CsvTable csv = read_csv(path);
  if (csv.header != std::vector<std::string>{"feature_name", "category", "lr_group"})
    throw Error(path + ": expected header feature_name,category,lr_group");
  Codebook cb;
  size_t row_no = 1;
  for (const auto& row : csv.rows) {
    ++row_no;
    CodebookEntry e;
    e.feature_name = row[0];
    e.category = parse_category(row[1]);
    if (!row[2].empty()) {
      try {
        e.lr_group = std::stoi(row[2]);
      } catch (const std::exception&) {
        throw Error(path + ":" + std::to_string(row_no) + ": lr_group must be blank or integer");
      }
    }
    cb.entries.push_back(std::move(e));
  }
  cb.validate();
  return cb;
}

std::pair<CaseTable, Codebook> load_cases(const std::string& cases_path,
                                          const std::string& codebook_path) {
  Codebook cb = load_codebook(codebook_path);
  CsvTable csv = read_csv(cases_path);
  if (csv.header.empty() || csv.header[0] != "case_id")
    throw Error(cases_path + ": first column must be case_id");

  // Columns may appear in any order but must match the codebook exactly.
  std::unordered_map<std::string, size_t> codebook_pos;
  for (size_t i = 0; i < cb.entries.size(); ++i)
    codebook_pos[cb.entries[i].feature_name] = i;
  std::vector<size_t> csv_col_for_feature(cb.entries.size(), SIZE_MAX);
  for (size_t c = 1; c < csv.header.size(); ++c) {
    auto it = codebook_pos.find(csv.header[c]);
    if (it == codebook_pos.end())
      throw Error(cases_path + ": column '" + csv.header[c] + "' is not in the codebook");
    if (csv_col_for_feature[it->second] != SIZE_MAX)
      throw Error(cases_path + ": column '" + csv.header[c] + "' appears twice");
    csv_col_for_feature[it->second] = c;
  }
  for (size_t i = 0; i < cb.entries.size(); ++i)
    if (csv_col_for_feature[i] == SIZE_MAX)
      throw Error(cases_path + ": codebook feature '" + cb.entries[i].feature_name +
                  "' has no column");

  CaseTable table;
  for (const auto& e : cb.entries) table.feature_names.push_back(e.feature_name);
  table.cells.reserve(csv.rows.size() * cb.entries.size());

  std::unordered_set<std::string> seen_ids;
  size_t row_no = 1;
  for (const auto& row : csv.rows) {
    ++row_no;
    const std::string& id = row[0];
    if (id.empty())
      throw Error(cases_path + ":" + std::to_string(row_no) + ": empty case id");
    if (!seen_ids.insert(id).second)
      throw Error(cases_path + ":" + std::to_string(row_no) + ": duplicate case id '" + id + "'");
    table.case_ids.push_back(id);
    for (size_t f = 0; f < cb.entries.size(); ++f) {
      const std::string& cell = row[csv_col_for_feature[f]];
      if (cell.empty())
        table.cells.push_back(kMissingCell);
      else if (cell == "0")
        table.cells.push_back(0);
      else if (cell == "1")
        table.cells.push_back(1);
      else
        throw Error(cases_path + ":" + std::to_string(row_no) + ": column '" +
                    cb.entries[f].feature_name + "': cell must be 0, 1 or empty, got '" +
                    cell + "'");
    }
  }
  return {std::move(table), std::move(cb)};
}

LinkageRegister load_linkage(const std::string& path, const CaseTable& table) {
  CsvTable csv = read_csv(path);
  if (csv.header != std::vector<std::string>{"case_id", "suspect_id"})
    throw Error(path + ": expected header case_id,suspect_id");
  LinkageRegister reg;
  for (const auto& row : csv.rows) reg.pairs.emplace_back(row[0], row[1]);
  reg.validate_against(table);
  return reg;
}

namespace {

CaseTable keep_columns(const CaseTable& table, const std::vector<size_t>& cols) {
  CaseTable out;
  out.case_ids = table.case_ids;
  for (size_t c : cols) out.feature_names.push_back(table.feature_names[c]);
  out.cells.reserve(table.n_cases() * cols.size());
  for (size_t r = 0; r < table.n_cases(); ++r)
    for (size_t c : cols) out.cells.push_back(table.at(r, c));
  return out;
}

}  // namespace

std::pair<CaseTable, PreprocessReport> drop_homogeneous(const CaseTable& table) {
  if (table.n_cases() == 0 || table.n_features() == 0)
    throw Error("drop_homogeneous: empty table");
  PreprocessReport report;
  std::vector<size_t> keep;
  for (size_t c = 0; c < table.n_features(); ++c) {
    bool has_zero = false, has_one = false;
    for (size_t r = 0; r < table.n_cases(); ++r) {
      int8_t v = table.at(r, c);
      if (v == 0) has_zero = true;
      else if (v == 1) has_one = true;
    }
    if (has_zero && has_one)
      keep.push_back(c);
    else
      report.dropped_homogeneous.push_back(table.feature_names[c]);
  }
  if (keep.empty()) throw Error("drop_homogeneous: every column is homogeneous");
  report.retained_features = keep.size();
  return {keep_columns(table, keep), std::move(report)};
}

std::pair<CaseTable, PreprocessReport> apply_missingness_policy(
    const CaseTable& table, double threshold, const std::set<std::string>& exempt) {
  if (!(threshold > 0.0) || threshold > 1.0)
    throw Error("missingness threshold must be in (0, 1]");
  PreprocessReport report;
  std::vector<size_t> keep;
  for (size_t c = 0; c < table.n_features(); ++c) {
    size_t missing = 0;
    for (size_t r = 0; r < table.n_cases(); ++r)
      if (table.at(r, c) == kMissingCell) ++missing;
    double frac = table.n_cases() == 0 ? 0.0
                                       : double(missing) / double(table.n_cases());
    if (frac <= threshold || exempt.count(table.feature_names[c]))
      keep.push_back(c);
    else
      report.dropped_missing.emplace_back(table.feature_names[c], frac);
  }
  report.retained_features = keep.size();
  return {keep_columns(table, keep), std::move(report)};
}

CaseTable impute(const CaseTable& table, uint64_t seed) {
  CaseTable out = table;
  for (size_t c = 0; c < table.n_features(); ++c) {
    size_t ones = 0, observed = 0;
    for (size_t r = 0; r < table.n_cases(); ++r) {
      int8_t v = table.at(r, c);
      if (v == kMissingCell) continue;
      ++observed;
      ones += (v == 1);
    }
    if (observed == 0)
      throw Error("impute: column '" + table.feature_names[c] + "' has no observed values");
    const double p = double(ones) / double(observed);
    // One stream per column keeps a column's draws independent of its
    // neighbours, so subsetting features does not reshuffle imputations.
    Rng rng(derive_seed(seed, "impute", c));
    for (size_t r = 0; r < table.n_cases(); ++r)
      if (out.at(r, c) == kMissingCell) out.at(r, c) = next_bernoulli(rng, p) ? 1 : 0;
  }
  return out;
}

CaseTable conform_to_features(const CaseTable& table,
                              const std::vector<std::string>& feature_names) {
  std::unordered_map<std::string, size_t> pos;
  for (size_t c = 0; c < table.n_features(); ++c) pos[table.feature_names[c]] = c;
  std::vector<size_t> cols;
  for (const auto& name : feature_names) {
    auto it = pos.find(name);
    if (it == pos.end())
      throw Error("table is missing feature '" + name + "' required by the model schema");
    cols.push_back(it->second);
  }
  return keep_columns(table, cols);
}

PreprocessReport merge_reports(const PreprocessReport& first, const PreprocessReport& second) {
  PreprocessReport out = first;
  out.dropped_missing.insert(out.dropped_missing.end(), second.dropped_missing.begin(),
                             second.dropped_missing.end());
  for (const auto& n : second.dropped_homogeneous) out.dropped_homogeneous.push_back(n);
  out.imputed_cells += second.imputed_cells;
  out.retained_features = second.retained_features;
  return out;
}

std::string preprocess_report_json(const PreprocessReport& report) {
  nlohmann::ordered_json j;
  j["dropped_homogeneous"] = report.dropped_homogeneous;
  auto& dm = j["dropped_missing"] = nlohmann::ordered_json::array();
  for (const auto& [name, frac] : report.dropped_missing)
    dm.push_back({{"feature", name}, {"missing_fraction", frac}});
  j["imputed_cells"] = report.imputed_cells;
  j["retained_features"] = report.retained_features;
  return j.dump(2) + "\n";
}

void write_cases_csv(const CaseTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "case_id";
  for (const auto& f : table.feature_names) out << ',' << csv_escape(f);
  out << '\n';
  for (size_t r = 0; r < table.n_cases(); ++r) {
    out << csv_escape(table.case_ids[r]);
    for (size_t c = 0; c < table.n_features(); ++c) {
      int8_t v = table.at(r, c);
      out << ',';
      if (v != kMissingCell) out << int(v);
    }
    out << '\n';
  }
}

void write_codebook_csv(const Codebook& codebook, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "feature_name,category,lr_group\n";
  for (const auto& e : codebook.entries) {
    out << csv_escape(e.feature_name) << ',' << to_string(e.category) << ',';
    if (e.lr_group) out << *e.lr_group;
    out << '\n';
  }
}

void write_linkage_csv(const LinkageRegister& reg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << "case_id,suspect_id\n";
  for (const auto& [c, s] : reg.pairs) out << csv_escape(c) << ',' << csv_escape(s) << '\n';
}

}  // namespace linkage
