#include "ssv/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>

#include "ssv/error.hpp"
#include "ssv/parallel.hpp"
#include "ssv/text.hpp"

namespace ssv {

namespace {

constexpr std::string_view kModule = "scorer";

[[noreturn]] void data_error(const std::string& message) {
  throw DataError(std::string(kModule), message);
}

const std::vector<double>& cohort_for(const CohortScoreMap& map, const std::string& utt_id) {
  const auto it = map.find(utt_id);
  if (it == map.end() || it->second.empty()) data_error("no cohort scores for '" + utt_id + "'");
  return it->second;
}

}  // namespace

namespace {

template <typename T>
double cosine_impl(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) {
    data_error("cosine: dim mismatch (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
  double dot = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = a[i];
    const double y = b[i];
    dot += x * y;
    aa += x * x;
    bb += y * y;
  }
  if (aa == 0.0 || bb == 0.0) data_error("cosine: zero-norm vector");
  return std::clamp(dot / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
}

}  // namespace

double cosine(std::span<const float> a, std::span<const float> b) { return cosine_impl(a, b); }

double cosine(std::span<const double> a, std::span<const double> b) { return cosine_impl(a, b); }

std::vector<ScoredTrial> score_trials(const std::vector<Trial>& trials, const EmbeddingStore& store,
                                      unsigned jobs) {
  // Resolve ids up front so the error names the first missing id in trial order.
  for (const auto& t : trials) {
    for (const auto* id : {&t.enroll_utt, &t.test_utt}) {
      if (store.find(*id) == nullptr) data_error("trial references unknown utt_id '" + *id + "'");
    }
  }
  std::vector<ScoredTrial> out(trials.size());
  parallel_for(trials.size(), jobs, [&](std::size_t i) {
    const auto& t = trials[i];
    out[i] = {t.enroll_utt, t.test_utt, cosine(store.vector(t.enroll_utt), store.vector(t.test_utt)), t.key};
  });
  return out;
}

CohortScoreMap cohort_scores(const EmbeddingStore& store, const std::vector<std::string>& utt_ids,
                             const EmbeddingStore& cohort, unsigned jobs) {
  if (cohort.empty()) data_error("empty cohort");
  if (cohort.dim() != store.dim()) {
    data_error("cohort dim " + std::to_string(cohort.dim()) + " differs from store dim " +
               std::to_string(store.dim()));
  }
  std::vector<std::vector<double>> rows(utt_ids.size());
  parallel_for(utt_ids.size(), jobs, [&](std::size_t i) {
    const auto v = store.vector(utt_ids[i]);
    auto& row = rows[i];
    row.reserve(cohort.size());
    for (const auto& c : cohort.records()) row.push_back(cosine(v, c.vector));
  });
  CohortScoreMap map;
  for (std::size_t i = 0; i < utt_ids.size(); ++i) map.emplace(utt_ids[i], std::move(rows[i]));
  return map;
}

TopKStats top_k_stats(std::span<const double> cohort_scores, std::size_t top_k) {
  if (top_k == 0) data_error("top_k must be positive");
  if (top_k > cohort_scores.size()) {
    data_error("top_k " + std::to_string(top_k) + " exceeds cohort size " +
               std::to_string(cohort_scores.size()));
  }
  std::vector<double> top(cohort_scores.begin(), cohort_scores.end());
  std::nth_element(top.begin(), top.begin() + static_cast<std::ptrdiff_t>(top_k - 1), top.end(),
                   std::greater<>());
  top.resize(top_k);
  double sum = 0.0;
  for (double v : top) sum += v;
  const double mean = sum / static_cast<double>(top_k);
  double ss = 0.0;
  for (double v : top) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(top_k))};
}

AsNormResult as_norm(const std::vector<ScoredTrial>& scores, const CohortScoreMap& enroll_cohort,
                     const CohortScoreMap& test_cohort, std::size_t top_k) {
  AsNormResult result;
  result.scores.reserve(scores.size());
  for (const auto& st : scores) {
    const auto e = top_k_stats(cohort_for(enroll_cohort, st.enroll_utt), top_k);
    const auto t = top_k_stats(cohort_for(test_cohort, st.test_utt), top_k);
    ScoredTrial out = st;
    if (e.stddev == 0.0 || t.stddev == 0.0) {
      result.warnings.push_back("zero cohort spread for trial " + st.enroll_utt + " / " + st.test_utt +
                                "; score left unnormalized");
    } else {
      out.score = 0.5 * ((st.score - e.mean) / e.stddev + (st.score - t.mean) / t.stddev);
    }
    result.scores.push_back(std::move(out));
  }
  return result;
}

void write_scores(const std::vector<ScoredTrial>& scores, std::ostream& out) {
  for (const auto& s : scores) {
    out << s.enroll_utt << '\t' << s.test_utt << '\t' << text::format_g(s.score, 9) << '\t'
        << to_string(s.key) << '\n';
  }
  if (!out) data_error("write failed");
}

void save_scores(const std::vector<ScoredTrial>& scores, const std::string& path) {
  std::ofstream out(path);
  if (!out) data_error("cannot write '" + path + "'");
  write_scores(scores, out);
}

std::vector<ScoredTrial> read_scores(std::istream& in) {
  std::vector<ScoredTrial> scores;
  std::string raw;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& what) {
    throw FormatError(std::string(kModule), "scores line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    const auto cols = text::split(text::chomp(raw), '\t');
    if (cols.size() != 4) fail("expected 4 columns, got " + std::to_string(cols.size()));
    double score = 0.0;
    if (!text::parse_double(cols[2], score)) fail("bad or non-finite score '" + std::string(cols[2]) + "'");
    TrialKey key = TrialKey::target;
    if (cols[3] == "nontarget") {
      key = TrialKey::nontarget;
    } else if (cols[3] != "target") {
      fail("unknown key '" + std::string(cols[3]) + "'");
    }
    scores.push_back({std::string(cols[0]), std::string(cols[1]), score, key});
  }
  return scores;
}

std::vector<ScoredTrial> load_scores(const std::string& path) {
  std::ifstream in(path);
  if (!in) data_error("cannot open '" + path + "'");
  return read_scores(in);
}

}  // namespace ssv
