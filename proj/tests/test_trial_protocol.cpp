#include <doctest.h>

#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "ssv/error.hpp"
#include "ssv/trial_protocol.hpp"

using namespace ssv;

namespace {

std::string serialize(const std::vector<Trial>& trials) {
  std::ostringstream out;
  write_trials(trials, out);
  return out.str();
}

void check_list_invariants(const Manifest& m, const TrialList& list) {
  std::array<std::size_t, 4> per{};
  std::set<std::tuple<int, std::string, std::string>> seen;
  for (const auto& t : list.trials) {
    REQUIRE(t.enroll_utt != t.test_utt);
    ++per[t.scenario - 1];
    CHECK(t.key == key_for_scenario(t.scenario));
    CHECK(scenario_of(*m.find(t.enroll_utt), *m.find(t.test_utt)) == t.scenario);
    const auto& [lo, hi] = std::minmax(t.enroll_utt, t.test_utt);
    CHECK(seen.emplace(t.scenario, lo, hi).second);
  }
  for (auto c : per) CHECK(c == list.per_scenario);
}

}  // namespace

TEST_CASE("scenario classification") {
  const ManifestEntry a{"a", "s1", "t1", "m", Split::test};
  CHECK(scenario_of(a, {"b", "s1", "t1", "m", Split::test}) == 1);
  CHECK(scenario_of(a, {"b", "s2", "t1", "m", Split::test}) == 2);
  CHECK(scenario_of(a, {"b", "s1", "t2", "m", Split::test}) == 3);
  CHECK(scenario_of(a, {"b", "s2", "t2", "m", Split::test}) == 4);
  CHECK(key_for_scenario(1) == TrialKey::target);
  CHECK(key_for_scenario(2) == TrialKey::nontarget);
  CHECK(key_for_scenario(3) == TrialKey::target);
  CHECK(key_for_scenario(4) == TrialKey::nontarget);
}

TEST_CASE("eligible pair counts on a 2x2x2 grid") {
  const auto m = fixture::grid_manifest(2, 2, 2);
  const auto counts = eligible_pair_counts(m, Split::test, std::nullopt);
  CHECK(counts == std::array<std::uint64_t, 4>{4, 8, 8, 8});
}

TEST_CASE("2 sources x 2 targets x 2 utterances, 2 per scenario") {
  const auto m = fixture::grid_manifest(2, 2, 2);
  const auto list = generate_trials(m, {Split::test, std::nullopt, 2, 7});
  CHECK(list.trials.size() == 8);
  check_list_invariants(m, list);
  std::size_t targets = 0;
  for (const auto& t : list.trials) targets += t.key == TrialKey::target;
  CHECK(targets == 4);
}

TEST_CASE("whole eligible set can be drawn") {
  const auto m = fixture::grid_manifest(2, 2, 2);
  const auto list = generate_trials(m, {Split::test, std::nullopt, 4, 1});
  check_list_invariants(m, list);
  // Scenario 1 has exactly 4 pairs, so all of them appear.
  std::size_t s1 = 0;
  for (const auto& t : list.trials) s1 += t.scenario == 1;
  CHECK(s1 == 4);
}

TEST_CASE("single source speaker makes scenario 2 infeasible") {
  const auto m = fixture::grid_manifest(1, 2, 3);
  try {
    (void)generate_trials(m, {Split::test, std::nullopt, 1, 0});
    FAIL("expected InfeasibleError");
  } catch (const InfeasibleError& e) {
    CHECK(e.scenario() == 2);
    CHECK(e.max_feasible() == 0);
    CHECK(std::string(e.what()).find("scenario 2") != std::string::npos);
  }
}

TEST_CASE("empty filter result is an error") {
  const auto m = fixture::grid_manifest(2, 2, 2);
  CHECK_THROWS_AS(generate_trials(m, {Split::dev, std::nullopt, 1, 0}), DataError);
  CHECK_THROWS_AS(generate_trials(m, {Split::test, std::string("nope"), 1, 0}), DataError);
}

TEST_CASE("generation is deterministic and seed dependent") {
  const auto m = fixture::random_manifest(3, 200, 6, 5);
  const TrialRequest req{Split::test, std::string("vc"), 40, 11};
  const auto a = serialize(generate_trials(m, req).trials);
  const auto b = serialize(generate_trials(m, req).trials);
  CHECK(a == b);
  auto other = req;
  other.seed = 12;
  CHECK(serialize(generate_trials(m, other).trials) != a);
}

TEST_CASE("filters restrict the pool") {
  const auto m = fixture::random_manifest(4, 300, 5, 5);
  const auto list = generate_trials(m, {Split::test, std::string("vc"), 30, 2});
  check_list_invariants(m, list);
  for (const auto& t : list.trials) {
    CHECK(m.find(t.enroll_utt)->method == "vc");
    CHECK(m.find(t.test_utt)->split == Split::test);
  }
}

TEST_CASE("output is sorted by scenario then ids") {
  const auto m = fixture::random_manifest(5, 150, 4, 4);
  const auto list = generate_trials(m, {Split::test, std::nullopt, 20, 3});
  CHECK(std::is_sorted(list.trials.begin(), list.trials.end(), [](const Trial& x, const Trial& y) {
    return std::tie(x.scenario, x.enroll_utt, x.test_utt) < std::tie(y.scenario, y.enroll_utt, y.test_utt);
  }));
}

TEST_CASE("dev-sized sets reproduce the published development trial total") {
  // 40 target speakers, 4847 target utterances, each converted from 3
  // distinct random source speakers out of 40: 14,622 utterances per set.
  // A balanced 7,311 per scenario over 12 sets gives 350,928 trials.
  Manifest m;
  CounterRng rng(2024, 1);
  for (int set = 1; set <= 12; ++set) {
    const std::string method = "dev-" + std::to_string(set);
    for (int u = 0; u < 4847; ++u) {
      const int target = u % 40;
      std::set<std::uint64_t> sources;
      while (sources.size() < 3) sources.insert(rng.below(40));
      int r = 0;
      for (auto s : sources) {
        m.add({method + "-" + std::to_string(u) + "-" + std::to_string(r++), "src" + std::to_string(s),
               "tgt" + std::to_string(target), method, Split::dev});
      }
    }
  }
  std::size_t total = 0;
  for (int set = 1; set <= 12; ++set) {
    const auto list = generate_trials(m, {Split::dev, "dev-" + std::to_string(set), 7311, 0});
    CHECK(list.trials.size() == 4 * 7311);
    total += list.trials.size();
  }
  CHECK(total == 350928);
}

TEST_CASE("trial file format") {
  SUBCASE("line layout") {
    CHECK(serialize({{"c1", "c2", 1, TrialKey::target}}) == "c1\tc2\t1\ttarget\n");
  }
  SUBCASE("round-trip") {
    const auto m = fixture::random_manifest(8, 120, 4, 4);
    const auto list = generate_trials(m, {Split::test, std::nullopt, 10, 5});
    std::istringstream in(serialize(list.trials));
    CHECK(read_trials(in) == list.trials);
  }
  SUBCASE("bad scenario") {
    std::istringstream in("c1\tc2\t5\ttarget\n");
    CHECK_THROWS_AS(read_trials(in), FormatError);
  }
  SUBCASE("bad key") {
    std::istringstream in("c1\tc2\t1\tyes\n");
    CHECK_THROWS_AS(read_trials(in), FormatError);
  }
  SUBCASE("key contradicting scenario") {
    std::istringstream in("c1\tc2\t2\ttarget\n");
    CHECK_THROWS_AS(read_trials(in), FormatError);
  }
  SUBCASE("wrong column count") {
    std::istringstream in("c1\tc2\t1\n");
    CHECK_THROWS_WITH_AS(read_trials(in), doctest::Contains("line 1"), FormatError);
  }
}
