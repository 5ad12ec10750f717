#include "ssv/trial_protocol.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_set>

#include "ssv/error.hpp"
#include "ssv/rng.hpp"
#include "ssv/text.hpp"

namespace ssv {

namespace {

constexpr std::string_view kModule = "trial-protocol";

std::uint64_t pairs_of(std::uint64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

// Eligible utterances with speaker labels interned to dense ids.
struct Pool {
  std::vector<const ManifestEntry*> entries;
  std::vector<std::uint32_t> source;
  std::vector<std::uint32_t> target;
  std::vector<std::vector<std::uint32_t>> by_source;
  std::vector<std::vector<std::uint32_t>> by_target;
  std::vector<std::vector<std::uint32_t>> by_cell;
  std::vector<std::uint32_t> all;
};

std::uint32_t intern(std::map<std::string_view, std::uint32_t>& ids, std::string_view label) {
  return ids.emplace(label, static_cast<std::uint32_t>(ids.size())).first->second;
}

Pool build_pool(const Manifest& manifest, Split split, const std::optional<std::string>& method) {
  Pool pool;
  std::map<std::string_view, std::uint32_t> sources, targets;
  std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> cells;
  for (const auto& e : manifest.entries()) {
    if (e.split != split || (method && e.method != *method)) continue;
    const auto u = static_cast<std::uint32_t>(pool.entries.size());
    const auto s = intern(sources, e.source_speaker);
    const auto t = intern(targets, e.target_speaker);
    const auto c = cells.emplace(std::pair{s, t}, static_cast<std::uint32_t>(cells.size())).first->second;
    pool.entries.push_back(&e);
    pool.source.push_back(s);
    pool.target.push_back(t);
    if (s >= pool.by_source.size()) pool.by_source.resize(s + 1);
    if (t >= pool.by_target.size()) pool.by_target.resize(t + 1);
    if (c >= pool.by_cell.size()) pool.by_cell.resize(c + 1);
    pool.by_source[s].push_back(u);
    pool.by_target[t].push_back(u);
    pool.by_cell[c].push_back(u);
    pool.all.push_back(u);
  }
  return pool;
}

std::array<std::uint64_t, kScenarioCount> count_pairs(const Pool& pool) {
  std::uint64_t same_cell = 0, same_target = 0, same_source = 0;
  for (const auto& g : pool.by_cell) same_cell += pairs_of(g.size());
  for (const auto& g : pool.by_target) same_target += pairs_of(g.size());
  for (const auto& g : pool.by_source) same_source += pairs_of(g.size());
  const std::uint64_t total = pairs_of(pool.all.size());
  const std::uint64_t s2 = same_target - same_cell;
  const std::uint64_t s3 = same_source - same_cell;
  return {same_cell, s2, s3, total - same_cell - s2 - s3};
}

int scenario_of_ids(const Pool& pool, std::uint32_t a, std::uint32_t b) {
  const bool same_source = pool.source[a] == pool.source[b];
  const bool same_target = pool.target[a] == pool.target[b];
  if (same_source) return same_target ? 1 : 3;
  return same_target ? 2 : 4;
}

// Proposal groups per scenario: every pair of the scenario lies inside one
// group, so drawing the group with weight |g|^2 and then two members
// uniformly gives a uniform ordered pair over the union of groups.
const std::vector<std::vector<std::uint32_t>>& proposal_groups(const Pool& pool, int scenario,
                                                               std::vector<std::vector<std::uint32_t>>& scratch) {
  switch (scenario) {
    case 1: return pool.by_cell;
    case 2: return pool.by_target;
    case 3: return pool.by_source;
    default:
      scratch = {pool.all};
      return scratch;
  }
}

}  // namespace

std::string_view to_string(TrialKey key) {
  return key == TrialKey::target ? "target" : "nontarget";
}

int scenario_of(const ManifestEntry& a, const ManifestEntry& b) {
  const bool same_source = a.source_speaker == b.source_speaker;
  const bool same_target = a.target_speaker == b.target_speaker;
  if (same_source) return same_target ? 1 : 3;
  return same_target ? 2 : 4;
}

std::array<std::uint64_t, kScenarioCount> eligible_pair_counts(const Manifest& manifest, Split split,
                                                               const std::optional<std::string>& method) {
  return count_pairs(build_pool(manifest, split, method));
}

TrialList generate_trials(const Manifest& manifest, const TrialRequest& request) {
  if (request.per_scenario == 0) throw DataError(std::string(kModule), "per_scenario must be positive");
  const Pool pool = build_pool(manifest, request.split, request.method);
  if (pool.all.empty()) {
    throw DataError(std::string(kModule),
                    "no manifest entries for split '" + std::string(to_string(request.split)) + "'" +
                        (request.method ? " and method '" + *request.method + "'" : std::string()));
  }
  const auto counts = count_pairs(pool);
  for (int s = 1; s <= kScenarioCount; ++s) {
    if (counts[s - 1] < request.per_scenario) {
      throw InfeasibleError(s, counts[s - 1],
                            "scenario " + std::to_string(s) + " has only " +
                                std::to_string(counts[s - 1]) + " eligible pairs, " +
                                std::to_string(request.per_scenario) + " requested");
    }
  }

  TrialList list;
  list.seed = request.seed;
  list.per_scenario = request.per_scenario;
  list.trials.reserve(request.per_scenario * kScenarioCount);

  std::vector<std::vector<std::uint32_t>> scratch;
  for (int s = 1; s <= kScenarioCount; ++s) {
    const auto& groups = proposal_groups(pool, s, scratch);
    std::vector<std::uint64_t> cumulative;
    cumulative.reserve(groups.size());
    std::uint64_t total = 0;
    for (const auto& g : groups) {
      total += static_cast<std::uint64_t>(g.size()) * g.size();
      cumulative.push_back(total);
    }

    CounterRng rng(request.seed, static_cast<std::uint64_t>(s));
    std::unordered_set<std::uint64_t> taken;
    taken.reserve(request.per_scenario * 2);
    std::size_t accepted = 0;
    while (accepted < request.per_scenario) {
      const std::uint64_t pick = rng.below(total);
      const auto gi = static_cast<std::size_t>(
          std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
      const auto& g = groups[gi];
      const std::uint32_t a = g[rng.below(g.size())];
      const std::uint32_t b = g[rng.below(g.size())];
      if (a == b || scenario_of_ids(pool, a, b) != s) continue;
      const std::uint64_t pair_key =
          (static_cast<std::uint64_t>(std::min(a, b)) << 32) | std::max(a, b);
      if (!taken.insert(pair_key).second) continue;
      list.trials.push_back({pool.entries[a]->utt_id, pool.entries[b]->utt_id, s, key_for_scenario(s)});
      ++accepted;
    }
  }

  std::sort(list.trials.begin(), list.trials.end(), [](const Trial& x, const Trial& y) {
    return std::tie(x.scenario, x.enroll_utt, x.test_utt) < std::tie(y.scenario, y.enroll_utt, y.test_utt);
  });
  return list;
}

void write_trials(const std::vector<Trial>& trials, std::ostream& out) {
  for (const auto& t : trials) {
    out << t.enroll_utt << '\t' << t.test_utt << '\t' << t.scenario << '\t' << to_string(t.key) << '\n';
  }
  if (!out) throw DataError(std::string(kModule), "write failed");
}

void save_trials(const std::vector<Trial>& trials, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError(std::string(kModule), "cannot write '" + path + "'");
  write_trials(trials, out);
}

std::vector<Trial> read_trials(std::istream& in) {
  std::vector<Trial> trials;
  std::string raw;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw FormatError(std::string(kModule), "trials line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const auto cols = text::split(text::chomp(raw), '\t');
    if (cols.size() != 4) fail("expected 4 columns, got " + std::to_string(cols.size()));
    if (cols[0].empty() || cols[1].empty()) fail("empty utterance id");
    if (cols[0] == cols[1]) fail("self-pair '" + std::string(cols[0]) + "'");
    if (cols[2].size() != 1 || cols[2][0] < '1' || cols[2][0] > '4') {
      fail("unknown scenario '" + std::string(cols[2]) + "'");
    }
    const int scenario = cols[2][0] - '0';
    TrialKey key = TrialKey::target;
    if (cols[3] == "nontarget") {
      key = TrialKey::nontarget;
    } else if (cols[3] != "target") {
      fail("unknown key '" + std::string(cols[3]) + "'");
    }
    if (key != key_for_scenario(scenario)) fail("key contradicts scenario " + std::to_string(scenario));
    trials.push_back({std::string(cols[0]), std::string(cols[1]), scenario, key});
  }
  return trials;
}

std::vector<Trial> load_trials(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(std::string(kModule), "cannot open '" + path + "'");
  return read_trials(in);
}

}  // namespace ssv
