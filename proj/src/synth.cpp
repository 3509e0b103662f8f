#include "linkage/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "linkage/rng.hpp"

namespace linkage {

std::vector<size_t> solved_style_histogram() {
  // 2 + 9x3 + 5x4 + 5 + 7 = 61 victims over 17 suspects, median 3;
  // sum C(v,2) = 1 + 9*3 + 5*6 + 10 + 21 = 89 linked pairs of 1830.
  return {2, 3, 3, 3, 3, 3, 3, 3, 3, 3, 4, 4, 4, 4, 4, 5, 7};
}

double expected_prevalence(const std::vector<size_t>& victims_per_suspect) {
  size_t total = 0;
  double linked = 0.0;
  for (size_t v : victims_per_suspect) {
    if (v < 1) throw Error("expected_prevalence: counts must be >= 1");
    total += v;
    linked += double(v) * double(v - 1) / 2.0;
  }
  if (total < 2) throw Error("expected_prevalence: need at least 2 victims in total");
  const double all = double(total) * double(total - 1) / 2.0;
  return linked / all;
}

Codebook synth_codebook(size_t n_features) {
  static const FeatureCategory cats[] = {
      FeatureCategory::Victim,          FeatureCategory::Suspect,
      FeatureCategory::InitialApproach, FeatureCategory::FollowOnContact,
      FeatureCategory::Maintenance,     FeatureCategory::Extortion,
      FeatureCategory::Closure,
  };
  Codebook cb;
  for (size_t j = 0; j < n_features; ++j) {
    CodebookEntry e;
    char buf[16];
    std::snprintf(buf, sizeof(buf), "f%03zu", j + 1);
    e.feature_name = buf;
    e.category = cats[j % (sizeof(cats) / sizeof(cats[0]))];
    e.lr_group = int(j % 6) + 1;
    cb.entries.push_back(std::move(e));
  }
  return cb;
}

std::pair<CaseTable, LinkageRegister> generate(const SynthConfig& config) {
  if (config.n_features < 1) throw Error("generate: need at least one feature");
  for (double f : {config.signature_density, config.noise_flip, config.missing_rate})
    if (f < 0.0 || f > 1.0) throw Error("generate: fractions must be in [0,1]");

  std::vector<size_t> victims = config.victims_per_suspect;
  Rng rng(derive_seed(config.seed, "synth"));
  if (victims.empty()) {
    if (!config.geometric_mean_victims)
      throw Error("generate: need a victims histogram or a geometric mean");
    const double mean = *config.geometric_mean_victims;
    if (!(mean >= 1.0)) throw Error("generate: geometric mean must be >= 1");
    // v = 1 + Geometric(q) with E[v] = mean, i.e. q = 1/mean.
    const double q = 1.0 / mean;
    for (size_t s = 0; s < config.n_suspects; ++s) {
      size_t v = 1;
      while (v < 1000 && !next_bernoulli(rng, q)) ++v;
      victims.push_back(v);
    }
  } else if (config.n_suspects != victims.size()) {
    throw Error("generate: histogram size must equal n_suspects");
  }

  CaseTable table;
  LinkageRegister reg;
  const Codebook cb = synth_codebook(config.n_features);
  for (const auto& e : cb.entries) table.feature_names.push_back(e.feature_name);

  size_t total_victims = 0;
  for (size_t v : victims) total_victims += v;
  const int id_width = int(std::to_string(total_victims).size());

  size_t case_no = 0;
  for (size_t s = 0; s < victims.size(); ++s) {
    std::vector<uint8_t> signature(config.n_features);
    for (auto& bit : signature) bit = next_bernoulli(rng, config.signature_density) ? 1 : 0;
    char sid[32];
    std::snprintf(sid, sizeof(sid), "s%03zu", s + 1);
    for (size_t v = 0; v < victims[s]; ++v) {
      ++case_no;
      char cid[32];
      std::snprintf(cid, sizeof(cid), "c%0*zu", id_width, case_no);
      table.case_ids.push_back(cid);
      reg.pairs.emplace_back(cid, sid);
      for (size_t j = 0; j < config.n_features; ++j) {
        uint8_t bit = signature[j];
        if (config.noise_flip > 0.0 && next_bernoulli(rng, config.noise_flip)) bit ^= 1;
        table.cells.push_back(int8_t(bit));
      }
    }
  }

  if (config.missing_rate > 0.0) {
    for (auto& cell : table.cells)
      if (next_bernoulli(rng, config.missing_rate)) cell = kMissingCell;
  }
  return {std::move(table), std::move(reg)};
}

}  // namespace linkage
