#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssv/scorer.hpp"

namespace ssv {

/// Operating point where false-alarm and miss rates meet.
///
/// A trial is accepted when score >= threshold (ties accept), so
///   P_miss(t) = #{target score < t} / n_target
///   P_fa(t)   = #{nontarget score >= t} / n_nontarget.
/// The empirical operating points are taken at every distinct score plus
/// +inf. The EER is where the straight segment between the two adjacent points
/// that bracket the sign change of P_miss - P_fa crosses the diagonal.
struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
  double p_fa_at = 0.0;
  double p_miss_at = 0.0;
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
  bool degenerate = false;  // every score identical
};

struct DetPoint {
  double threshold;
  double p_fa;
  double p_miss;
};

// Throws DataError when either class is empty or a score is non-finite.
EerResult compute_eer(std::span<const ScoredTrial> scored);
EerResult compute_eer(std::span<const double> target_scores, std::span<const double> nontarget_scores);

// Empirical (P_fa, P_miss) staircase, ascending threshold; the last point
// has threshold +inf.
std::vector<DetPoint> det_points(std::span<const double> target_scores,
                                 std::span<const double> nontarget_scores);

struct ScoreReport {
  std::vector<std::pair<std::string, double>> per_set;  // (set name, EER fraction)
  double score = 0.0;                                   // mean EER
};

// Mean EER over sets, listed in input order. Throws DataError on empty input.
ScoreReport challenge_score(std::vector<std::pair<std::string, double>> per_set_eers);

// Fraction of exact label matches. Throws DataError on empty or
// mismatched-length input.
double accuracy(std::span<const std::string> predicted, std::span<const std::string> truth);

// "name TAB eer" per line. EER may be a fraction ("0.09786") or a percent
// ("9.786%").
std::vector<std::pair<std::string, double>> read_eer_table(std::istream& in);

// Aligned text table: one row per set, then a "Score" row, percents with
// three decimals.
void print_report(const ScoreReport& report, std::ostream& out);
void write_report_tsv(const ScoreReport& report, std::ostream& out);

}  // namespace ssv
