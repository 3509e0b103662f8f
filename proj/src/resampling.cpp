#include "linkage/resampling.hpp"

#include <algorithm>
#include <cmath>

namespace linkage {

PairLabel minority_label(const PairwiseDataset& data) {
  size_t linked = 0, unlinked = 0;
  for (const auto& r : data.rows) {
    if (r.label == PairLabel::Unknown)
      throw Error("resampling requires fully labelled pairs");
    (r.label == PairLabel::Linked ? linked : unlinked)++;
  }
  if (linked == 0 || unlinked == 0)
    throw Error("resampling requires both classes to be present");
  return linked <= unlinked ? PairLabel::Linked : PairLabel::Unlinked;
}

PairwiseDataset rose_sample(const PairwiseDataset& data, const RoseParams& params) {
  if (!(params.p > 0.0 && params.p < 1.0)) throw Error("rose_sample: p must be in (0,1)");
  if (params.smoothing < 0.0) throw Error("rose_sample: smoothing must be >= 0");
  const size_t n_out = params.n_out == 0 ? data.rows.size() : params.n_out;
  if (n_out < 2) throw Error("rose_sample: n_out must be >= 2");

  const PairLabel minority = minority_label(data);
  std::vector<size_t> by_class[2];  // [0] majority, [1] minority
  for (size_t i = 0; i < data.rows.size(); ++i)
    by_class[data.rows[i].label == minority ? 1 : 0].push_back(i);

  const double q = std::min(params.smoothing, 0.5);
  Rng rng(params.seed);
  PairwiseDataset out;
  out.feature_names = data.feature_names;
  out.rows.reserve(n_out);
  for (size_t t = 0; t < n_out; ++t) {
    const bool pick_minority = next_bernoulli(rng, params.p);
    const auto& pool = by_class[pick_minority ? 1 : 0];
    const PairRow& src = data.rows[pool[next_below(rng, pool.size())]];
    PairRow row;
    row.label = src.label;
    row.match = src.match;
    for (auto& v : row.match)
      if (q > 0.0 && next_bernoulli(rng, q)) v ^= 1;
    out.rows.push_back(std::move(row));
  }
  return out;
}

std::vector<uint8_t> smote_interpolate(std::span<const uint8_t> seed_row,
                                       std::span<const uint8_t> neighbour_row, double u,
                                       Rng& rng) {
  if (seed_row.size() != neighbour_row.size())
    throw Error("smote_interpolate: row lengths differ");
  std::vector<uint8_t> out(seed_row.size());
  for (size_t i = 0; i < out.size(); ++i) {
    if (seed_row[i] == neighbour_row[i])
      out[i] = seed_row[i];
    else
      out[i] = next_bernoulli(rng, u) ? neighbour_row[i] : seed_row[i];
  }
  return out;
}

std::vector<size_t> make_tie_rank(size_t n, uint64_t seed) {
  std::vector<size_t> perm(n);
  for (size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng(derive_seed(seed, "tie-rank"));
  seeded_shuffle(perm, rng);
  std::vector<size_t> rank(n);
  for (size_t i = 0; i < n; ++i) rank[perm[i]] = i;
  return rank;
}

std::vector<size_t> jaccard_neighbours(const PairwiseDataset& data, size_t row,
                                       const std::vector<size_t>& candidates, size_t k,
                                       const std::vector<size_t>& tie_rank) {
  std::vector<std::pair<double, size_t>> scored;  // (similarity, candidate)
  scored.reserve(candidates.size());
  for (size_t c : candidates) {
    if (c == row) continue;
    scored.emplace_back(jaccard(data.rows[row].match, data.rows[c].match), c);
  }
  if (scored.size() < k)
    throw Error("jaccard_neighbours: fewer than k candidate rows");
  std::partial_sort(scored.begin(), scored.begin() + std::ptrdiff_t(k), scored.end(),
                    [&](const auto& lhs, const auto& rhs) {
                      if (lhs.first != rhs.first) return lhs.first > rhs.first;
                      return tie_rank[lhs.second] < tie_rank[rhs.second];
                    });
  std::vector<size_t> out(k);
  for (size_t i = 0; i < k; ++i) out[i] = scored[i].second;
  return out;
}

PairwiseDataset smote_sample(const PairwiseDataset& data, double target_minority,
                             size_t k, uint64_t seed) {
  if (!(target_minority > 0.0 && target_minority < 1.0))
    throw Error("smote_sample: target minority fraction must be in (0,1)");
  const PairLabel minority = minority_label(data);
  std::vector<size_t> minority_rows;
  for (size_t i = 0; i < data.rows.size(); ++i)
    if (data.rows[i].label == minority) minority_rows.push_back(i);
  if (minority_rows.size() <= k)
    throw Error("smote_sample: minority class must have more than k rows");

  const double m = double(minority_rows.size());
  const double n = double(data.rows.size());
  long long synth = llround(std::ceil((target_minority * n - m) / (1.0 - target_minority)));
  if (synth < 0) synth = 0;

  PairwiseDataset out = data;  // original rows stay as a prefix
  const auto tie_rank = make_tie_rank(data.rows.size(), seed);
  Rng rng(derive_seed(seed, "smote"));
  for (long long s = 0; s < synth; ++s) {
    size_t base = minority_rows[next_below(rng, minority_rows.size())];
    auto nns = jaccard_neighbours(data, base, minority_rows, k, tie_rank);
    size_t nb = nns[next_below(rng, nns.size())];
    const double u = next_unit(rng);
    PairRow row;
    row.label = minority;
    row.match = smote_interpolate(data.rows[base].match, data.rows[nb].match, u, rng);
    out.rows.push_back(std::move(row));
  }
  return out;
}

PairwiseDataset kf_filter(const PairwiseDataset& data, const KfParams& params) {
  if (params.k < 1) throw Error("kf_filter: k must be >= 1");
  if (params.k >= data.rows.size())
    throw Error("kf_filter: k must be smaller than the number of rows");
  const PairLabel minority = minority_label(data);
  const PairLabel majority =
      minority == PairLabel::Linked ? PairLabel::Unlinked : PairLabel::Linked;

  std::vector<size_t> all(data.rows.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = i;
  const auto tie_rank = make_tie_rank(data.rows.size(), params.seed);

  // Decisions are taken against the original labels, then applied at once.
  std::vector<size_t> to_relabel;
  for (size_t i = 0; i < data.rows.size(); ++i) {
    if (data.rows[i].label != minority) continue;
    auto nns = jaccard_neighbours(data, i, all, params.k, tie_rank);
    bool all_majority = true;
    for (size_t nb : nns)
      if (data.rows[nb].label != majority) {
        all_majority = false;
        break;
      }
    if (all_majority) to_relabel.push_back(i);
  }
  PairwiseDataset out = data;
  for (size_t i : to_relabel) out.rows[i].label = majority;
  return out;
}

}  // namespace linkage
