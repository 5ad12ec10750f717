#include "ssv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>

#include "ssv/error.hpp"
#include "ssv/text.hpp"

namespace ssv {

namespace {

constexpr std::string_view kModule = "metrics";

[[noreturn]] void data_error(const std::string& message) {
  throw DataError(std::string(kModule), message);
}

void check_inputs(std::span<const double> targets, std::span<const double> nontargets) {
  if (targets.empty()) data_error("no target trials");
  if (nontargets.empty()) data_error("no nontarget trials");
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(targets.begin(), targets.end(), finite) ||
      !std::all_of(nontargets.begin(), nontargets.end(), finite)) {
    data_error("non-finite score");
  }
}

}  // namespace

std::vector<DetPoint> det_points(std::span<const double> target_scores,
                                 std::span<const double> nontarget_scores) {
  check_inputs(target_scores, nontarget_scores);
  std::vector<double> tgt(target_scores.begin(), target_scores.end());
  std::vector<double> non(nontarget_scores.begin(), nontarget_scores.end());
  std::sort(tgt.begin(), tgt.end());
  std::sort(non.begin(), non.end());

  std::vector<double> thresholds;
  thresholds.reserve(tgt.size() + non.size());
  std::merge(tgt.begin(), tgt.end(), non.begin(), non.end(), std::back_inserter(thresholds));
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const double nt = static_cast<double>(tgt.size());
  const double nn = static_cast<double>(non.size());
  std::vector<DetPoint> points;
  points.reserve(thresholds.size() + 1);
  std::size_t below_t = 0;  // targets strictly below the current threshold
  std::size_t below_n = 0;  // nontargets strictly below
  for (double th : thresholds) {
    while (below_t < tgt.size() && tgt[below_t] < th) ++below_t;
    while (below_n < non.size() && non[below_n] < th) ++below_n;
    points.push_back({th, static_cast<double>(non.size() - below_n) / nn, static_cast<double>(below_t) / nt});
  }
  points.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
  return points;
}

EerResult compute_eer(std::span<const double> target_scores, std::span<const double> nontarget_scores) {
  const auto points = det_points(target_scores, nontarget_scores);
  EerResult r;
  r.n_target = target_scores.size();
  r.n_nontarget = nontarget_scores.size();
  r.degenerate = points.size() == 2;

  // P_miss - P_fa is -1 at the lowest threshold and +1 at +inf.
  std::size_t k = 0;
  while (points[k].p_miss - points[k].p_fa < 0.0) ++k;
  const auto& hi = points[k];
  if (hi.p_miss == hi.p_fa) {
    r.eer = r.p_fa_at = r.p_miss_at = hi.p_miss;
    r.threshold = hi.threshold;
    return r;
  }
  const auto& lo = points[k - 1];
  const double d_lo = lo.p_miss - lo.p_fa;
  const double d_hi = hi.p_miss - hi.p_fa;
  const double t = -d_lo / (d_hi - d_lo);
  const double miss = lo.p_miss + t * (hi.p_miss - lo.p_miss);
  const double fa = lo.p_fa + t * (hi.p_fa - lo.p_fa);
  r.p_miss_at = miss;
  r.p_fa_at = fa;
  r.eer = 0.5 * (miss + fa);
  r.threshold = std::isinf(hi.threshold) ? lo.threshold : lo.threshold + t * (hi.threshold - lo.threshold);
  return r;
}

EerResult compute_eer(std::span<const ScoredTrial> scored) {
  std::vector<double> targets, nontargets;
  for (const auto& s : scored) (s.key == TrialKey::target ? targets : nontargets).push_back(s.score);
  return compute_eer(targets, nontargets);
}

ScoreReport challenge_score(std::vector<std::pair<std::string, double>> per_set_eers) {
  if (per_set_eers.empty()) data_error("challenge score needs at least one set");
  ScoreReport report;
  double sum = 0.0;
  for (const auto& [name, eer] : per_set_eers) {
    if (!std::isfinite(eer)) data_error("non-finite EER for set '" + name + "'");
    sum += eer;
  }
  report.score = sum / static_cast<double>(per_set_eers.size());
  report.per_set = std::move(per_set_eers);
  return report;
}

double accuracy(std::span<const std::string> predicted, std::span<const std::string> truth) {
  if (predicted.size() != truth.size()) {
    data_error("accuracy: " + std::to_string(predicted.size()) + " predictions for " +
               std::to_string(truth.size()) + " labels");
  }
  if (truth.empty()) data_error("accuracy: empty input");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::vector<std::pair<std::string, double>> read_eer_table(std::istream& in) {
  std::vector<std::pair<std::string, double>> rows;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto cols = text::split(text::chomp(raw), '\t');
    auto fail = [&](const std::string& what) {
      throw FormatError(std::string(kModule), "EER table line " + std::to_string(line_no) + ": " + what);
    };
    if (cols.size() != 2 || cols[0].empty()) fail("expected 'name TAB eer'");
    std::string_view token = cols[1];
    const bool percent = token.ends_with('%');
    if (percent) token.remove_suffix(1);
    double value = 0.0;
    if (!text::parse_double(token, value)) fail("bad EER '" + std::string(cols[1]) + "'");
    rows.emplace_back(std::string(cols[0]), percent ? value / 100.0 : value);
  }
  return rows;
}

void print_report(const ScoreReport& report, std::ostream& out) {
  std::size_t width = 5;  // "Score"
  for (const auto& [name, _] : report.per_set) width = std::max(width, name.size());
  for (const auto& [name, eer] : report.per_set) {
    out << std::left << std::setw(static_cast<int>(width)) << name << "  " << std::right << std::setw(8)
        << text::format_percent(eer) << '\n';
  }
  out << std::left << std::setw(static_cast<int>(width)) << "Score" << "  " << std::right << std::setw(8)
      << text::format_percent(report.score) << '\n';
}

void write_report_tsv(const ScoreReport& report, std::ostream& out) {
  for (const auto& [name, eer] : report.per_set) out << name << '\t' << text::format_percent(eer) << '\n';
  out << "Score\t" << text::format_percent(report.score) << '\n';
}

}  // namespace ssv
