#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "ssv/embedding_store.hpp"
#include "ssv/trial_protocol.hpp"

namespace ssv {

struct ScoredTrial {
  std::string enroll_utt;
  std::string test_utt;
  double score = 0.0;
  TrialKey key = TrialKey::target;

  bool operator==(const ScoredTrial&) const = default;
};

/// Cosine similarity accumulated in double precision and clamped to [-1, 1].
/// Throws DataError on a dim mismatch or a zero-norm input.
double cosine(std::span<const float> a, std::span<const float> b);
double cosine(std::span<const double> a, std::span<const double> b);

// One score per trial, in trial order. Throws DataError naming the first
// utterance id missing from the store.
std::vector<ScoredTrial> score_trials(const std::vector<Trial>& trials, const EmbeddingStore& store,
                                      unsigned jobs = 1);

// Cosine scores of each listed utterance against every cohort vector.
using CohortScoreMap = std::unordered_map<std::string, std::vector<double>>;
CohortScoreMap cohort_scores(const EmbeddingStore& store, const std::vector<std::string>& utt_ids,
                             const EmbeddingStore& cohort, unsigned jobs = 1);

struct TopKStats {
  double mean = 0.0;
  double stddev = 0.0;  // population (divides by k)
};

// Mean and standard deviation of the top_k largest values.
TopKStats top_k_stats(std::span<const double> cohort_scores, std::size_t top_k);

struct AsNormResult {
  std::vector<ScoredTrial> scores;
  // One message per trial whose selected cohort had zero spread; those
  // trials keep their raw score.
  std::vector<std::string> warnings;
};

/// Symmetric adaptive score normalization:
///   s' = ((s - mu_e) / sd_e + (s - mu_t) / sd_t) / 2
/// with (mu, sd) taken over the top_k highest cohort scores of the enrollment
/// and test utterance respectively. Throws DataError if an utterance has no
/// cohort scores or top_k is 0 or exceeds its cohort size.
AsNormResult as_norm(const std::vector<ScoredTrial>& scores, const CohortScoreMap& enroll_cohort,
                     const CohortScoreMap& test_cohort, std::size_t top_k);

inline constexpr std::size_t kDefaultTopK = 300;

// "enroll TAB test TAB score TAB key", score with 9 significant digits.
void write_scores(const std::vector<ScoredTrial>& scores, std::ostream& out);
void save_scores(const std::vector<ScoredTrial>& scores, const std::string& path);
std::vector<ScoredTrial> read_scores(std::istream& in);
std::vector<ScoredTrial> load_scores(const std::string& path);

}  // namespace ssv
