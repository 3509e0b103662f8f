#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "linkage/ingest.hpp"

namespace linkage {

/// Generator configuration. Victim counts per suspect come from an explicit
/// histogram when given, otherwise from a shifted geometric distribution
/// with the requested mean.
struct SynthConfig {
  size_t n_suspects = 17;
  std::vector<size_t> victims_per_suspect;  // explicit counts, one per suspect
  std::optional<double> geometric_mean_victims;
  size_t n_features = 51;
  double signature_density = 0.35;  // Bernoulli rate of a suspect's MO profile
  double noise_flip = 0.1;          // per-victim per-feature flip probability
  double missing_rate = 0.0;        // injected completely at random
  uint64_t seed = 1;
};

/// Each suspect draws a latent binary MO signature; each victim's features
/// are that signature with independent flips. The register records the
/// ground truth. Case ids are zero-padded so lexicographic order matches
/// numeric order.
std::pair<CaseTable, LinkageRegister> generate(const SynthConfig& config);

/// Codebook matching generate()'s schema: eight categories cycled, six
/// lr_groups cycled.
Codebook synth_codebook(size_t n_features);

/// Fraction of linked pairs implied by a victims-per-suspect histogram:
/// sum_s C(v_s, 2) / C(sum_s v_s, 2).
double expected_prevalence(const std::vector<size_t>& victims_per_suspect);

/// Documented fixture: 17 suspects, 61 victims, median 3 victims per
/// suspect, linked-pair prevalence 89/1830 (about 4.86%).
std::vector<size_t> solved_style_histogram();

}  // namespace linkage
