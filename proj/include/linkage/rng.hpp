#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace linkage {

// All randomness in the toolkit flows through these helpers. std::mt19937_64
// has a standardised output sequence, but the <random> distributions do not,
// so uniform/bernoulli draws are implemented by hand to keep runs
// bit-reproducible across toolchains.

using Rng = std::mt19937_64;

uint64_t fnv1a64(std::string_view s);
uint64_t splitmix64(uint64_t x);

/// Per-stage seed derivation: mixes a master seed with a stage tag so that
/// stages consume independent streams. Documented in the README; manifests
/// record the derived values.
uint64_t derive_seed(uint64_t master, std::string_view tag);
uint64_t derive_seed(uint64_t master, std::string_view tag, uint64_t index);

/// Uniform integer in [0, n). n must be positive.
uint64_t next_below(Rng& rng, uint64_t n);

/// Uniform double in [0, 1) with 53 random bits.
double next_unit(Rng& rng);

bool next_bernoulli(Rng& rng, double p);

template <typename T>
void seeded_shuffle(std::vector<T>& v, Rng& rng) {
  for (size_t i = v.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(next_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace linkage
