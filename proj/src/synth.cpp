#include "ssv/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>

#include "ssv/error.hpp"
#include "ssv/parallel.hpp"
#include "ssv/rng.hpp"
#include "ssv/text.hpp"

namespace ssv {

namespace {

constexpr std::string_view kModule = "synth";

[[noreturn]] void data_error(const std::string& message) {
  throw DataError(std::string(kModule), message);
}

// Stream ids keep each latent draw independent of every other.
enum StreamKind : std::uint64_t { kSource = 1, kTarget = 2, kMethod = 3, kSpeakerNoise = 4, kMethodNoise = 5 };

std::uint64_t stream_id(StreamKind kind, std::uint64_t index) { return (index << 3) | kind; }

std::vector<double> draw_normal(std::uint64_t seed, StreamKind kind, std::uint64_t index, std::size_t dim,
                                double sigma) {
  CounterRng rng(seed, stream_id(kind, index));
  std::vector<double> v(dim);
  for (auto& x : v) x = sigma * rng.normal();
  return v;
}

std::string label(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i + 1);
  return buf;
}

std::size_t parse_count(std::string_view key, std::string_view value) {
  unsigned long long v = 0;
  if (!text::parse_u64(value, v)) data_error("bad integer for '" + std::string(key) + "': '" + std::string(value) + "'");
  return static_cast<std::size_t>(v);
}

double parse_real(std::string_view key, std::string_view value) {
  double v = 0.0;
  if (!text::parse_double(value, v)) data_error("bad number for '" + std::string(key) + "': '" + std::string(value) + "'");
  return v;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

void SynthConfig::validate() const {
  if (n_source_speakers == 0 || n_target_speakers == 0) data_error("need at least one source and one target speaker");
  if (n_methods == 0) data_error("need at least one method");
  if (utts_per_cell == 0) data_error("utts_per_cell must be positive");
  if (dim == 0) data_error("dim must be positive");
  for (double s : {sigma_source, sigma_target, sigma_method, sigma_noise}) {
    if (!std::isfinite(s) || s < 0.0) data_error("scales must be finite and nonnegative");
  }
  if (alpha_per_method.size() != n_methods) {
    data_error("alpha has " + std::to_string(alpha_per_method.size()) + " values for " +
               std::to_string(n_methods) + " methods");
  }
  for (double a : alpha_per_method) {
    if (!(a >= 0.0 && a <= 1.0)) data_error("alpha values must lie in [0, 1]");
  }
}

void apply_setting(SynthConfig& c, std::string_view key, std::string_view value) {
  if (key == "n_source_speakers") {
    c.n_source_speakers = parse_count(key, value);
  } else if (key == "n_target_speakers") {
    c.n_target_speakers = parse_count(key, value);
  } else if (key == "n_methods") {
    c.n_methods = parse_count(key, value);
    if (c.alpha_per_method.size() == 1 || (!c.alpha_per_method.empty() &&
        std::all_of(c.alpha_per_method.begin(), c.alpha_per_method.end(),
                    [&](double a) { return a == c.alpha_per_method.front(); }))) {
      c.alpha_per_method.assign(c.n_methods, c.alpha_per_method.empty() ? 0.5 : c.alpha_per_method.front());
    }
  } else if (key == "utts_per_cell") {
    c.utts_per_cell = parse_count(key, value);
  } else if (key == "dim") {
    c.dim = parse_count(key, value);
  } else if (key == "sigma_source") {
    c.sigma_source = parse_real(key, value);
  } else if (key == "sigma_target") {
    c.sigma_target = parse_real(key, value);
  } else if (key == "sigma_method") {
    c.sigma_method = parse_real(key, value);
  } else if (key == "sigma_noise") {
    c.sigma_noise = parse_real(key, value);
  } else if (key == "alpha" || key == "alpha_per_method") {
    std::vector<double> alphas;
    for (auto tok : text::split(value, ',')) alphas.push_back(parse_real(key, trim(tok)));
    if (alphas.size() == 1) alphas.assign(c.n_methods, alphas.front());
    c.alpha_per_method = std::move(alphas);
  } else if (key == "split") {
    const auto s = parse_split(value);
    if (!s) data_error("unknown split '" + std::string(value) + "'");
    c.split = *s;
  } else if (key == "seed") {
    c.seed = parse_count(key, value);
  } else {
    data_error("unknown setting '" + std::string(key) + "'");
  }
}

SynthConfig read_synth_config(std::istream& in) {
  SynthConfig config;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw FormatError(std::string(kModule), "config line " + std::to_string(line_no) + ": expected key=value");
    }
    apply_setting(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

SynthConfig load_synth_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) data_error("cannot open '" + path + "'");
  return read_synth_config(in);
}

SynthData generate(const SynthConfig& config, unsigned jobs) {
  config.validate();
  const std::size_t dim = config.dim;
  const std::uint64_t seed = config.seed;

  std::vector<std::vector<double>> mu_source(config.n_source_speakers), mu_target(config.n_target_speakers),
      mu_method(config.n_methods);
  for (std::size_t s = 0; s < mu_source.size(); ++s) mu_source[s] = draw_normal(seed, kSource, s, dim, config.sigma_source);
  for (std::size_t t = 0; t < mu_target.size(); ++t) mu_target[t] = draw_normal(seed, kTarget, t, dim, config.sigma_target);
  for (std::size_t k = 0; k < mu_method.size(); ++k) mu_method[k] = draw_normal(seed, kMethod, k, dim, config.sigma_method);

  // Utterance order: method, source, target, repetition.
  const std::size_t per_method = config.n_source_speakers * config.n_target_speakers * config.utts_per_cell;
  const std::size_t total = per_method * config.n_methods;
  std::vector<std::vector<float>> spk(total), mth(total);
  std::vector<ManifestEntry> entries(total);

  parallel_for(total, jobs, [&](std::size_t u) {
    const std::size_t k = u / per_method;
    const std::size_t rest = u % per_method;
    const std::size_t s = rest / (config.n_target_speakers * config.utts_per_cell);
    const std::size_t t = (rest / config.utts_per_cell) % config.n_target_speakers;
    const std::size_t r = rest % config.utts_per_cell;
    const double alpha = config.alpha_per_method[k];

    // Latent means are shared across splits; noise is not.
    const std::uint64_t noise_index = u * 3 + static_cast<std::uint64_t>(config.split);
    CounterRng spk_noise(seed, stream_id(kSpeakerNoise, noise_index));
    CounterRng mth_noise(seed, stream_id(kMethodNoise, noise_index));
    spk[u].resize(dim);
    mth[u].resize(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      const double base = alpha * mu_source[s][i] + (1.0 - alpha) * mu_target[t][i];
      spk[u][i] = static_cast<float>(base + config.sigma_noise * spk_noise.normal());
      mth[u][i] = static_cast<float>(mu_method[k][i] + config.sigma_noise * mth_noise.normal());
    }
    auto& e = entries[u];
    e.source_speaker = label("src", s);
    e.target_speaker = label("tgt", t);
    e.method = label("vc", k);
    e.utt_id = e.method + "_" + e.source_speaker + "_" + e.target_speaker + "_" + label("u", r);
    e.split = config.split;
  });

  SynthData data{EmbeddingStore(dim), EmbeddingStore(dim), Manifest{}};
  for (std::size_t u = 0; u < total; ++u) {
    data.speaker.add(entries[u].utt_id, std::move(spk[u]));
    data.method.add(entries[u].utt_id, std::move(mth[u]));
    data.manifest.add(std::move(entries[u]));
  }
  data.speaker.set_manifest(data.manifest);
  data.method.set_manifest(data.manifest);
  return data;
}

}  // namespace ssv
