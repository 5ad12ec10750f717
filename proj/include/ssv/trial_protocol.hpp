#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ssv/embedding_store.hpp"

namespace ssv {

enum class TrialKey { target, nontarget };

std::string_view to_string(TrialKey key);

/// Scenarios over a pair of converted utterances:
///   1 same source, same target       (target trial)
///   2 different source, same target  (nontarget)
///   3 same source, different target  (target)
///   4 different source and target    (nontarget)
inline constexpr int kScenarioCount = 4;

inline constexpr TrialKey key_for_scenario(int scenario) {
  return (scenario == 1 || scenario == 3) ? TrialKey::target : TrialKey::nontarget;
}

int scenario_of(const ManifestEntry& a, const ManifestEntry& b);

struct Trial {
  std::string enroll_utt;
  std::string test_utt;
  int scenario = 1;
  TrialKey key = TrialKey::target;

  bool operator==(const Trial&) const = default;
};

struct TrialList {
  std::vector<Trial> trials;
  std::uint64_t seed = 0;
  std::size_t per_scenario = 0;
};

struct TrialRequest {
  Split split = Split::test;
  std::optional<std::string> method;  // restrict to one conversion method
  std::size_t per_scenario = 0;
  std::uint64_t seed = 0;
};

// Number of distinct unordered non-self pairs available per scenario
// (index 0 holds scenario 1) after applying the split/method filter.
std::array<std::uint64_t, kScenarioCount> eligible_pair_counts(const Manifest& manifest,
                                                               Split split,
                                                               const std::optional<std::string>& method);

// Samples exactly per_scenario distinct pairs for every scenario. Throws
// InfeasibleError for the first scenario that cannot be filled and
// DataError when the filter leaves nothing.
TrialList generate_trials(const Manifest& manifest, const TrialRequest& request);

// "enroll TAB test TAB scenario TAB key" per line.
void write_trials(const std::vector<Trial>& trials, std::ostream& out);
void save_trials(const std::vector<Trial>& trials, const std::string& path);
std::vector<Trial> read_trials(std::istream& in);
std::vector<Trial> load_trials(const std::string& path);

}  // namespace ssv
