#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ssv/embedding_store.hpp"

namespace ssv {

// Label returned for samples rejected as coming from a method outside the
// fitted set.
inline constexpr std::string_view kUnseen = "unseen";

inline constexpr double kDefaultThreshold = 0.4;

struct MethodSample {
  std::string utt_id;
  std::vector<float> vector;
  std::string method;
};

enum class PartitionTag { none, ts1, ts9 };

struct MethodEmbeddingSet {
  std::vector<MethodSample> items;
  PartitionTag tag = PartitionTag::none;
};

// Pairs every manifest entry of `split` with its vector. Throws DataError if
// an entry has no vector.
MethodEmbeddingSet method_set_from(const EmbeddingStore& store, const Manifest& manifest, Split split);

struct Partition {
  MethodEmbeddingSet ts1;  // threshold calibration, ~10% per method
  MethodEmbeddingSet ts9;  // center fitting, the rest
};

// Stratified random 1:9 split: round(0.1 * n) items of each method go to
// ts1. Item order inside each part follows the input. Throws DataError for a
// method with fewer than 10 items.
Partition partition_1_9(const MethodEmbeddingSet& set, std::uint64_t seed);

/// Open-set nearest-neighbour classifier over per-method class centers.
struct OsnnModel {
  std::map<std::string, std::vector<double>> centers;  // label -> mean vector
  std::size_t dim = 0;
  double threshold = kDefaultThreshold;

  // Throws DataError unless there are >= 2 finite centers of equal dim and
  // 0 < threshold < 1.
  void validate() const;
};

// Per-method mean of the vectors. Threshold is left at the default.
OsnnModel fit_centers(const MethodEmbeddingSet& ts9);

double euclidean(std::span<const double> x, std::span<const double> y);
double euclidean(std::span<const float> x, std::span<const double> y);

struct Classification {
  std::string label;    // nearest method, or kUnseen
  std::string nearest;  // nearest method regardless of the decision
  double ratio = 1.0;   // d(x, nearest) / d(x, second nearest), in [0, 1]
};

// Accepts the nearest center when ratio < threshold. Equal distances are
// broken by label order; two zero distances give ratio 1.
Classification classify(const OsnnModel& model, std::span<const float> x);
Classification classify(const OsnnModel& model, std::span<const float> x, double threshold);
Classification classify(const OsnnModel& model, std::span<const double> x, double threshold);

struct CalibrationResult {
  double threshold = 0.0;
  bool stabilized = false;
  std::vector<std::pair<double, double>> curve;  // (T, accuracy on ts1)
};

inline constexpr double kDefaultGridStep = 0.01;
inline constexpr double kDefaultEpsilon = 0.001;  // 0.1 percentage points
inline constexpr std::size_t kDefaultWindow = 5;

// Sweeps T over {step, 2 step, ...} below 1 and returns the smallest T whose
// accuracy is nonzero and whose gain to each of the next `window` grid
// points stays below epsilon. Falls back to the largest grid T with stabilized = false.
CalibrationResult calibrate_threshold(const OsnnModel& model, const MethodEmbeddingSet& ts1,
                                      double grid_step = kDefaultGridStep, double epsilon = kDefaultEpsilon,
                                      std::size_t window = kDefaultWindow);

struct OpenSetAccuracy {
  std::optional<double> seen;    // empty when no sample has a fitted method
  std::optional<double> unseen;  // empty when every sample has a fitted method
  std::size_t n_seen = 0;
  std::size_t n_unseen = 0;
};

// Samples whose method is not a fitted center (or is kUnseen) count as
// unseen; they are correct when rejected.
OpenSetAccuracy evaluate_open_set(const OsnnModel& model, const MethodEmbeddingSet& samples);

// Header "dim=<d> TAB threshold=<t>", then "label TAB space-separated
// center values", all reals with 17 significant digits.
void write_model(const OsnnModel& model, std::ostream& out);
void save_model(const OsnnModel& model, const std::string& path);
OsnnModel read_model(std::istream& in);
OsnnModel load_model(const std::string& path);

// "utt_id TAB label TAB ratio"
void write_classifications(std::span<const std::string> utt_ids, std::span<const Classification> results,
                           std::ostream& out);

}  // namespace ssv
