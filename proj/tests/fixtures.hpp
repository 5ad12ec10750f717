#pragma once

// Manifest and score builders shared by the unit and acceptance suites.

#include <cstdint>
#include <string>
#include <vector>

#include "ssv/embedding_store.hpp"
#include "ssv/rng.hpp"
#include "ssv/scorer.hpp"

namespace ssv::fixture {

// Full grid: every (source, target) cell holds `per_cell` utterances.
inline Manifest grid_manifest(std::size_t n_source, std::size_t n_target, std::size_t per_cell,
                              const std::string& method = "vc", Split split = Split::test) {
  Manifest m;
  for (std::size_t s = 0; s < n_source; ++s) {
    for (std::size_t t = 0; t < n_target; ++t) {
      for (std::size_t r = 0; r < per_cell; ++r) {
        m.add({method + "_s" + std::to_string(s) + "_t" + std::to_string(t) + "_" + std::to_string(r),
               "s" + std::to_string(s), "t" + std::to_string(t), method, split});
      }
    }
  }
  return m;
}

// Irregular manifest: each utterance gets a random source and target, with
// some rows in other splits/methods that filters must ignore.
inline Manifest random_manifest(std::uint64_t seed, std::size_t n_utts, std::size_t n_source,
                                std::size_t n_target) {
  CounterRng rng(seed, 77);
  Manifest m;
  for (std::size_t i = 0; i < n_utts; ++i) {
    const auto s = rng.below(n_source);
    const auto t = rng.below(n_target);
    const bool noise_row = rng.below(10) == 0;
    m.add({"u" + std::to_string(i), "src" + std::to_string(s), "tgt" + std::to_string(t),
           noise_row ? "other" : "vc", noise_row && rng.below(2) ? Split::dev : Split::test});
  }
  return m;
}

// Scores for a trial set with the given class sizes; `separation` shifts
// the target mean, `ties` quantizes scores onto a coarse grid.
inline std::vector<ScoredTrial> random_scores(std::uint64_t seed, std::size_t n_target, std::size_t n_nontarget,
                                              double separation, bool ties = false) {
  CounterRng rng(seed, 5);
  std::vector<ScoredTrial> out;
  auto draw = [&](double mean) {
    double v = mean + rng.normal();
    if (ties) v = std::round(v * 4.0) / 4.0;
    return v;
  };
  for (std::size_t i = 0; i < n_target; ++i) out.push_back({"e", "t", draw(separation), TrialKey::target});
  for (std::size_t i = 0; i < n_nontarget; ++i) out.push_back({"e", "t", draw(0.0), TrialKey::nontarget});
  // Interleave so key order carries no information.
  for (std::size_t i = out.size(); i > 1; --i) std::swap(out[i - 1], out[rng.below(i)]);
  return out;
}

}  // namespace ssv::fixture
