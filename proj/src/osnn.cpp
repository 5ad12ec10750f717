#include "ssv/osnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>

#include "ssv/error.hpp"
#include "ssv/rng.hpp"
#include "ssv/text.hpp"

namespace ssv {

namespace {

constexpr std::string_view kModule = "osnn";

[[noreturn]] void data_error(const std::string& message) {
  throw DataError(std::string(kModule), message);
}

template <typename T>
double squared_distance(std::span<const T> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    data_error("dim mismatch (" + std::to_string(x.size()) + " vs " + std::to_string(y.size()) + ")");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = static_cast<double>(x[i]) - y[i];
    sum += d * d;
  }
  return sum;
}

template <typename T>
Classification classify_impl(const OsnnModel& model, std::span<const T> x, double threshold) {
  if (model.centers.size() < 2) data_error("classification needs at least 2 centers");
  if (x.size() != model.dim) {
    data_error("sample dim " + std::to_string(x.size()) + " differs from model dim " + std::to_string(model.dim));
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  double d1 = inf, d2 = inf;
  const std::string* first = nullptr;
  // Centers iterate in label order, so strict comparisons keep the
  // lexicographically smallest label on ties.
  for (const auto& [label, c] : model.centers) {
    const double d = std::sqrt(squared_distance(x, std::span<const double>(c)));
    if (d < d1) {
      d2 = d1;
      d1 = d;
      first = &label;
    } else if (d < d2) {
      d2 = d;
    }
  }
  Classification out;
  out.nearest = *first;
  out.ratio = d2 == 0.0 ? 1.0 : d1 / d2;
  out.label = out.ratio < threshold ? *first : std::string(kUnseen);
  return out;
}

}  // namespace

MethodEmbeddingSet method_set_from(const EmbeddingStore& store, const Manifest& manifest, Split split) {
  MethodEmbeddingSet set;
  for (const auto& e : manifest.entries()) {
    if (e.split != split) continue;
    const auto* rec = store.find(e.utt_id);
    if (rec == nullptr) data_error("no method embedding for '" + e.utt_id + "'");
    set.items.push_back({e.utt_id, rec->vector, e.method});
  }
  return set;
}

Partition partition_1_9(const MethodEmbeddingSet& set, std::uint64_t seed) {
  std::map<std::string, std::vector<std::size_t>> by_method;
  for (std::size_t i = 0; i < set.items.size(); ++i) by_method[set.items[i].method].push_back(i);

  std::vector<char> in_ts1(set.items.size(), 0);
  for (auto& [method, idx] : by_method) {
    if (idx.size() < 10) {
      data_error("method '" + method + "' has " + std::to_string(idx.size()) +
                 " items; at least 10 are needed for a 1:9 split");
    }
    const auto n_ts1 = static_cast<std::size_t>(std::lround(0.1 * static_cast<double>(idx.size())));
    CounterRng rng(seed, fnv1a(method));
    // Partial Fisher-Yates: the first n_ts1 slots end up a uniform sample.
    for (std::size_t i = 0; i < n_ts1; ++i) {
      const std::size_t j = i + rng.below(idx.size() - i);
      std::swap(idx[i], idx[j]);
      in_ts1[idx[i]] = 1;
    }
  }

  Partition out;
  out.ts1.tag = PartitionTag::ts1;
  out.ts9.tag = PartitionTag::ts9;
  for (std::size_t i = 0; i < set.items.size(); ++i) {
    (in_ts1[i] ? out.ts1 : out.ts9).items.push_back(set.items[i]);
  }
  return out;
}

void OsnnModel::validate() const {
  if (centers.size() < 2) data_error("model needs at least 2 centers, has " + std::to_string(centers.size()));
  if (dim == 0) data_error("model dim must be positive");
  for (const auto& [label, c] : centers) {
    if (c.size() != dim) data_error("center '" + label + "' has dim " + std::to_string(c.size()));
    if (!std::all_of(c.begin(), c.end(), [](double v) { return std::isfinite(v); })) {
      data_error("center '" + label + "' is not finite");
    }
  }
  if (!(threshold > 0.0 && threshold < 1.0)) data_error("threshold must lie in (0, 1)");
}

OsnnModel fit_centers(const MethodEmbeddingSet& ts9) {
  if (ts9.items.empty()) data_error("no samples to fit centers");
  OsnnModel model;
  model.dim = ts9.items.front().vector.size();
  std::map<std::string, std::size_t> counts;
  for (const auto& item : ts9.items) {
    if (item.vector.size() != model.dim) data_error("sample '" + item.utt_id + "' has mismatched dim");
    auto& c = model.centers[item.method];
    if (c.empty()) c.assign(model.dim, 0.0);
    for (std::size_t i = 0; i < model.dim; ++i) c[i] += item.vector[i];
    ++counts[item.method];
  }
  for (auto& [label, c] : model.centers) {
    const double n = static_cast<double>(counts[label]);
    for (auto& v : c) v /= n;
  }
  return model;
}

double euclidean(std::span<const double> x, std::span<const double> y) {
  return std::sqrt(squared_distance(x, y));
}

double euclidean(std::span<const float> x, std::span<const double> y) {
  return std::sqrt(squared_distance(x, y));
}

Classification classify(const OsnnModel& model, std::span<const float> x, double threshold) {
  return classify_impl(model, x, threshold);
}

Classification classify(const OsnnModel& model, std::span<const double> x, double threshold) {
  return classify_impl(model, x, threshold);
}

Classification classify(const OsnnModel& model, std::span<const float> x) {
  return classify(model, x, model.threshold);
}

CalibrationResult calibrate_threshold(const OsnnModel& model, const MethodEmbeddingSet& ts1, double grid_step,
                                      double epsilon, std::size_t window) {
  if (ts1.items.empty()) data_error("calibration set is empty");
  if (!(grid_step > 0.0 && grid_step < 1.0)) data_error("grid_step must lie in (0, 1)");

  // Ratio of each correctly-nearest sample; others never count as correct.
  std::vector<double> correct_ratios;
  for (const auto& item : ts1.items) {
    const auto c = classify(model, item.vector, 1.0);
    if (c.nearest == item.method) correct_ratios.push_back(c.ratio);
  }
  std::sort(correct_ratios.begin(), correct_ratios.end());

  CalibrationResult result;
  const double n = static_cast<double>(ts1.items.size());
  for (std::size_t k = 1;; ++k) {
    const double t = static_cast<double>(k) * grid_step;
    if (t >= 1.0 - 1e-12) break;
    const auto hits = std::lower_bound(correct_ratios.begin(), correct_ratios.end(), t) - correct_ratios.begin();
    result.curve.emplace_back(t, static_cast<double>(hits) / n);
  }
  if (result.curve.empty()) data_error("grid_step leaves no threshold below 1");

  const auto& curve = result.curve;
  for (std::size_t k = 0; k + window < curve.size(); ++k) {
    // A flat stretch at zero accuracy precedes the rise; it is not a plateau.
    if (curve[k].second == 0.0) continue;
    bool flat = true;
    for (std::size_t m = 1; m <= window && flat; ++m) flat = curve[k + m].second - curve[k].second < epsilon;
    if (flat) {
      result.threshold = curve[k].first;
      result.stabilized = true;
      return result;
    }
  }
  result.threshold = curve.back().first;
  return result;
}

OpenSetAccuracy evaluate_open_set(const OsnnModel& model, const MethodEmbeddingSet& samples) {
  std::size_t seen_hits = 0, unseen_hits = 0;
  OpenSetAccuracy acc;
  for (const auto& item : samples.items) {
    const auto c = classify(model, item.vector);
    const bool known = item.method != kUnseen && model.centers.contains(item.method);
    if (known) {
      ++acc.n_seen;
      seen_hits += c.label == item.method;
    } else {
      ++acc.n_unseen;
      unseen_hits += c.label == kUnseen;
    }
  }
  if (acc.n_seen) acc.seen = static_cast<double>(seen_hits) / static_cast<double>(acc.n_seen);
  if (acc.n_unseen) acc.unseen = static_cast<double>(unseen_hits) / static_cast<double>(acc.n_unseen);
  return acc;
}

void write_model(const OsnnModel& model, std::ostream& out) {
  out << "dim=" << model.dim << "\tthreshold=" << text::format_g(model.threshold, 17) << '\n';
  for (const auto& [label, c] : model.centers) {
    out << label << '\t';
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (i) out << ' ';
      out << text::format_g(c[i], 17);
    }
    out << '\n';
  }
  if (!out) data_error("write failed");
}

void save_model(const OsnnModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) data_error("cannot write '" + path + "'");
  write_model(model, out);
}

OsnnModel read_model(std::istream& in) {
  std::size_t line_no = 1;
  auto fail = [&](const std::string& what) {
    throw FormatError(std::string(kModule), "model line " + std::to_string(line_no) + ": " + what);
  };
  std::string raw;
  if (!std::getline(in, raw)) fail("missing header");
  const auto header = text::split(text::chomp(raw), '\t');
  OsnnModel model;
  unsigned long long dim = 0;
  if (header.size() != 2 || !header[0].starts_with("dim=") || !header[1].starts_with("threshold=") ||
      !text::parse_u64(header[0].substr(4), dim) || !text::parse_double(header[1].substr(10), model.threshold)) {
    fail("expected 'dim=<d> TAB threshold=<t>'");
  }
  model.dim = static_cast<std::size_t>(dim);
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = text::chomp(raw);
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) fail("expected 'label TAB values'");
    const auto tokens = text::split_spaces(line.substr(tab + 1));
    std::vector<double> c(tokens.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (!text::parse_double(tokens[i], c[i])) fail("bad value '" + std::string(tokens[i]) + "'");
    }
    if (c.size() != model.dim) fail("center has " + std::to_string(c.size()) + " values, header says " + std::to_string(dim));
    if (!model.centers.emplace(std::string(line.substr(0, tab)), std::move(c)).second) fail("duplicate label");
  }
  model.validate();
  return model;
}

OsnnModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) data_error("cannot open '" + path + "'");
  return read_model(in);
}

void write_classifications(std::span<const std::string> utt_ids, std::span<const Classification> results,
                           std::ostream& out) {
  for (std::size_t i = 0; i < results.size(); ++i) {
    out << utt_ids[i] << '\t' << results[i].label << '\t' << text::format_g(results[i].ratio, 9) << '\n';
  }
}

}  // namespace ssv
