#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "ssv/embedding_store.hpp"

namespace ssv {

/// Gaussian generative model for converted-speech embeddings.
///
/// Every source speaker s, target speaker t and method k gets a latent mean
/// (mu_s, mu_t, m_k) drawn from an isotropic normal with its own scale. An
/// utterance (s, t, k) then has
///   speaker embedding = alpha_k * mu_s + (1 - alpha_k) * mu_t + noise
///   method embedding  = m_k + noise'
/// so alpha_k controls how much source identity survives conversion.
/// Configs differing only in split share every latent mean but draw
/// independent noise.
struct SynthConfig {
  std::size_t n_source_speakers = 8;
  std::size_t n_target_speakers = 8;
  std::size_t n_methods = 4;
  std::size_t utts_per_cell = 2;  // per (source, target, method)
  std::size_t dim = 32;
  double sigma_source = 1.0;
  double sigma_target = 1.0;
  double sigma_method = 1.0;
  double sigma_noise = 0.3;
  std::vector<double> alpha_per_method = {0.5, 0.5, 0.5, 0.5};
  Split split = Split::test;
  std::uint64_t seed = 0;

  // Throws DataError on zero counts, a wrong-length alpha list, alpha outside
  // [0, 1], or negative/non-finite scales.
  void validate() const;
};

// Applies one "key=value" setting; keys match the field names, alpha takes
// a comma-separated list (a single value is repeated for every method).
void apply_setting(SynthConfig& config, std::string_view key, std::string_view value);

// Flat key=value file; '#' starts a comment line.
SynthConfig read_synth_config(std::istream& in);
SynthConfig load_synth_config(const std::string& path);

struct SynthData {
  EmbeddingStore speaker;
  EmbeddingStore method;
  Manifest manifest;
};

// Output is identical for any `jobs`.
SynthData generate(const SynthConfig& config, unsigned jobs = 1);

}  // namespace ssv
