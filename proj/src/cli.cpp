#include "ssv/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>

#include "ssv/embedding_store.hpp"
#include "ssv/error.hpp"
#include "ssv/metrics.hpp"
#include "ssv/osnn.hpp"
#include "ssv/scorer.hpp"
#include "ssv/synth.hpp"
#include "ssv/text.hpp"
#include "ssv/trial_protocol.hpp"

namespace ssv::cli {

namespace {

namespace fs = std::filesystem;

// Per-set cap when --per-scenario is omitted.
constexpr std::uint64_t kDefaultPerScenarioCap = 25000;

struct Options {
  std::string manifest;
  std::string embeddings;
  std::string trials;
  std::vector<std::string> scores;
  std::string eers;
  std::string out;
  std::string model;
  std::string cohort;
  std::string config;
  std::string curve;
  std::string det;
  std::string format;
  std::string split;
  std::string method;
  std::uint64_t seed = 0;
  std::size_t per_scenario = 0;
  std::size_t top_k = kDefaultTopK;
  double grid_step = kDefaultGridStep;
  double epsilon = kDefaultEpsilon;
  std::size_t window = kDefaultWindow;
  double threshold = kDefaultThreshold;
  unsigned jobs = 1;

  // synth knobs, applied only when given
  std::map<std::string, std::string> synth;
};

std::optional<EmbeddingFormat> parse_format(const std::string& token) {
  if (token.empty()) return std::nullopt;
  return token == "binary" ? EmbeddingFormat::binary : EmbeddingFormat::text;
}

EmbeddingStore load_store(const Options& o, const std::string& path) {
  const auto fmt = parse_format(o.format);
  return fmt ? load_embeddings(path, *fmt) : load_embeddings(path);
}

Split split_or(const Options& o, Split fallback) {
  if (o.split.empty()) return fallback;
  return *parse_split(o.split);  // validated by the CLI11 check
}

// Runs `write` against --out when given, otherwise against `out`.
template <typename Write>
void emit(const Options& o, std::ostream& out, Write&& write) {
  if (o.out.empty()) {
    write(out);
    return;
  }
  std::ofstream file(o.out);
  if (!file) throw DataError("cli", "cannot write '" + o.out + "'");
  write(file);
}

int cmd_synth(const Options& o, std::ostream&, std::ostream& err) {
  SynthConfig config = o.config.empty() ? SynthConfig{} : load_synth_config(o.config);
  for (const auto& [key, value] : o.synth) apply_setting(config, key, value);
  const auto data = generate(config, o.jobs);

  const auto fmt = parse_format(o.format).value_or(EmbeddingFormat::binary);
  const std::string ext = fmt == EmbeddingFormat::binary ? ".ssve" : ".txt";
  fs::create_directories(o.out);
  const fs::path dir(o.out);
  save_embeddings(data.speaker, (dir / ("speaker" + ext)).string(), fmt);
  save_embeddings(data.method, (dir / ("method" + ext)).string(), fmt);
  save_manifest(data.manifest, (dir / "manifest.tsv").string());
  err << "wrote " << data.manifest.size() << " utterances (dim " << config.dim << ") to " << o.out << '\n';
  return kExitOk;
}

int cmd_gen_trials(const Options& o, std::ostream& out, std::ostream& err) {
  const auto manifest = load_manifest(o.manifest);
  TrialRequest req;
  req.split = split_or(o, Split::test);
  if (!o.method.empty()) req.method = o.method;
  req.seed = o.seed;
  req.per_scenario = o.per_scenario;
  if (req.per_scenario == 0) {
    const auto counts = eligible_pair_counts(manifest, req.split, req.method);
    const auto min_count = *std::min_element(counts.begin(), counts.end());
    req.per_scenario = static_cast<std::size_t>(std::min(min_count, kDefaultPerScenarioCap));
    if (req.per_scenario == 0) {
      const auto it = std::min_element(counts.begin(), counts.end());
      const int scenario = static_cast<int>(it - counts.begin()) + 1;
      throw InfeasibleError(scenario, 0, "scenario " + std::to_string(scenario) + " has no eligible pairs");
    }
  }
  const auto list = generate_trials(manifest, req);
  emit(o, out, [&](std::ostream& s) { write_trials(list.trials, s); });
  err << "generated " << list.trials.size() << " trials (" << req.per_scenario << " per scenario)\n";
  return kExitOk;
}

int cmd_score(const Options& o, std::ostream& out, std::ostream& err) {
  const auto trials = load_trials(o.trials);
  const auto store = load_store(o, o.embeddings);
  auto scores = score_trials(trials, store, o.jobs);
  if (!o.cohort.empty()) {
    const auto cohort = load_store(o, o.cohort);
    std::vector<std::string> ids;
    for (const auto& t : trials) {
      ids.push_back(t.enroll_utt);
      ids.push_back(t.test_utt);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    const auto cohort_map = cohort_scores(store, ids, cohort, o.jobs);
    const std::size_t k = std::min(o.top_k, cohort.size());
    auto normed = as_norm(scores, cohort_map, cohort_map, k);
    for (const auto& w : normed.warnings) err << "warning: " << w << '\n';
    scores = std::move(normed.scores);
  }
  emit(o, out, [&](std::ostream& s) { write_scores(scores, s); });
  return kExitOk;
}

int cmd_eer(const Options& o, std::ostream& out, std::ostream&) {
  const auto scores = load_scores(o.scores.front());
  const auto r = compute_eer(scores);
  out << "EER " << text::format_percent(r.eer) << '\n';
  out << "threshold " << text::format_g(r.threshold, 9) << '\n';
  if (!o.det.empty()) {
    std::vector<double> tgt, non;
    for (const auto& s : scores) (s.key == TrialKey::target ? tgt : non).push_back(s.score);
    std::ofstream file(o.det);
    if (!file) throw DataError("cli", "cannot write '" + o.det + "'");
    for (const auto& p : det_points(tgt, non)) {
      file << text::format_g(p.threshold, 9) << '\t' << text::format_g(p.p_fa, 9) << '\t'
           << text::format_g(p.p_miss, 9) << '\n';
    }
  }
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out, std::ostream&) {
  std::vector<std::pair<std::string, double>> rows;
  if (!o.eers.empty()) {
    std::ifstream in(o.eers);
    if (!in) throw DataError("cli", "cannot open '" + o.eers + "'");
    rows = read_eer_table(in);
  }
  for (const auto& path : o.scores) {
    rows.emplace_back(fs::path(path).stem().string(), compute_eer(load_scores(path)).eer);
  }
  const auto report = challenge_score(std::move(rows));
  print_report(report, out);
  if (!o.out.empty()) {
    std::ofstream file(o.out);
    if (!file) throw DataError("cli", "cannot write '" + o.out + "'");
    write_report_tsv(report, file);
  }
  return kExitOk;
}

MethodEmbeddingSet method_set(const Options& o, Split fallback) {
  const auto store = load_store(o, o.embeddings);
  const auto manifest = load_manifest(o.manifest);
  return method_set_from(store, manifest, split_or(o, fallback));
}

int cmd_osnn_fit(const Options& o, std::ostream&, std::ostream& err) {
  const auto parts = partition_1_9(method_set(o, Split::train), o.seed);
  auto model = fit_centers(parts.ts9);
  model.threshold = o.threshold;
  model.validate();
  save_model(model, o.out);
  err << "fitted " << model.centers.size() << " centers from " << parts.ts9.items.size() << " samples ("
      << parts.ts1.items.size() << " held out for calibration)\n";
  return kExitOk;
}

int cmd_osnn_calibrate(const Options& o, std::ostream& out, std::ostream& err) {
  auto model = load_model(o.model);
  const auto parts = partition_1_9(method_set(o, Split::train), o.seed);
  const auto cal = calibrate_threshold(model, parts.ts1, o.grid_step, o.epsilon, o.window);
  if (!cal.stabilized) err << "warning: accuracy never stabilized; using the largest grid threshold\n";
  model.threshold = cal.threshold;
  save_model(model, o.out.empty() ? o.model : o.out);
  if (!o.curve.empty()) {
    std::ofstream file(o.curve);
    if (!file) throw DataError("cli", "cannot write '" + o.curve + "'");
    for (const auto& [t, acc] : cal.curve) file << text::format_g(t, 9) << '\t' << text::format_g(acc, 9) << '\n';
  }
  out << "threshold " << text::format_g(cal.threshold, 9) << '\n';
  return kExitOk;
}

int cmd_osnn_classify(const Options& o, std::ostream& out, std::ostream&) {
  const auto model = load_model(o.model);
  const auto store = load_store(o, o.embeddings);
  std::vector<std::string> ids;
  std::vector<Classification> results;
  for (const auto& rec : store.records()) {
    ids.push_back(rec.utt_id);
    results.push_back(classify(model, rec.vector));
  }
  emit(o, out, [&](std::ostream& s) { write_classifications(ids, results, s); });
  return kExitOk;
}

int cmd_osnn_eval(const Options& o, std::ostream& out, std::ostream&) {
  const auto model = load_model(o.model);
  const auto acc = evaluate_open_set(model, method_set(o, Split::test));
  auto show = [](const std::optional<double>& v) { return v ? text::format_percent(*v) : std::string("n/a"); };
  out << "seen accuracy " << show(acc.seen) << " (n=" << acc.n_seen << ")\n";
  out << "unseen accuracy " << show(acc.unseen) << " (n=" << acc.n_unseen << ")\n";
  return kExitOk;
}

int cmd_validate(const Options& o, std::ostream& out, std::ostream& err) {
  int problems = 0;
  auto check = [&](const std::string& what, auto&& body) {
    try {
      body();
      out << "ok " << what << '\n';
    } catch (const std::exception& e) {
      err << "FAIL " << what << ": " << e.what() << '\n';
      ++problems;
    }
  };

  std::optional<EmbeddingStore> store;
  std::optional<Manifest> manifest;
  if (!o.embeddings.empty()) check("embeddings " + o.embeddings, [&] { store = load_store(o, o.embeddings); });
  if (!o.manifest.empty()) check("manifest " + o.manifest, [&] { manifest = load_manifest(o.manifest); });
  if (store && manifest) {
    check("join", [&] {
      store->set_manifest(*manifest);
      const auto report = join_validate(*store);
      if (!report.valid()) {
        throw DataError("embedding-store", std::to_string(report.missing_manifest.size()) +
                                               " ids without manifest rows, " +
                                               std::to_string(report.missing_embedding.size()) +
                                               " manifest rows without vectors");
      }
    });
  }
  if (!o.trials.empty()) {
    check("trials " + o.trials, [&] {
      const auto trials = load_trials(o.trials);
      for (const auto& t : trials) {
        if (manifest) {
          const auto* a = manifest->find(t.enroll_utt);
          const auto* b = manifest->find(t.test_utt);
          if (!a || !b) throw DataError("trial-protocol", "trial id missing from manifest: " + t.enroll_utt + " / " + t.test_utt);
          if (scenario_of(*a, *b) != t.scenario) {
            throw DataError("trial-protocol", "scenario of " + t.enroll_utt + " / " + t.test_utt + " contradicts manifest");
          }
        }
        if (store && (!store->find(t.enroll_utt) || !store->find(t.test_utt))) {
          throw DataError("trial-protocol", "trial id missing from embeddings: " + t.enroll_utt + " / " + t.test_utt);
        }
      }
    });
  }
  for (const auto& path : o.scores) check("scores " + path, [&] { (void)load_scores(path); });
  if (!o.model.empty()) check("model " + o.model, [&] { (void)load_model(o.model); });
  return problems == 0 ? kExitOk : kExitDataError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Source speaker verification evaluation toolkit", args.empty() ? "ssvkit" : args.front()};
  app.require_subcommand(1);
  Options o;

  const auto format_check = CLI::IsMember({"binary", "text"});
  const auto split_check = CLI::IsMember({"train", "dev", "test"});
  auto add_jobs = [&](CLI::App* sub) {
    sub->add_option("--jobs", o.jobs, "Worker threads (output does not depend on it)")->check(CLI::Range(1u, 1024u));
  };
  auto add_format = [&](CLI::App* sub) {
    sub->add_option("--format", o.format, "Embedding file format (default: by extension)")->check(format_check);
  };

  auto* synth = app.add_subcommand("synth", "Generate synthetic speaker/method embeddings and a manifest");
  synth->add_option("--config", o.config, "key=value config file")->check(CLI::ExistingFile);
  synth->add_option("--out", o.out, "Output directory")->required();
  synth->add_option("--seed", o.seed, "Random seed");
  add_format(synth);
  add_jobs(synth);
  for (const auto& [flag, key] : std::vector<std::pair<std::string, std::string>>{
           {"--n-source", "n_source_speakers"}, {"--n-target", "n_target_speakers"},
           {"--n-methods", "n_methods"},        {"--utts-per-cell", "utts_per_cell"},
           {"--dim", "dim"},                    {"--sigma-source", "sigma_source"},
           {"--sigma-target", "sigma_target"},  {"--sigma-method", "sigma_method"},
           {"--sigma-noise", "sigma_noise"},    {"--alpha", "alpha"},
           {"--split", "split"}}) {
    synth->add_option_function<std::string>(flag, [&o, key = key](const std::string& v) { o.synth[key] = v; },
                                            "Overrides '" + key + "'");
  }

  auto* gen = app.add_subcommand("gen-trials", "Generate a balanced four-scenario trial list");
  gen->add_option("--manifest", o.manifest)->required()->check(CLI::ExistingFile);
  gen->add_option("--split", o.split, "Split to draw from (default test)")->check(split_check);
  gen->add_option("--method", o.method, "Restrict to one conversion method");
  gen->add_option("--per-scenario", o.per_scenario, "Trials per scenario (default: min eligible, capped at 25000)");
  gen->add_option("--seed", o.seed);
  gen->add_option("--out", o.out, "Trial file (default stdout)");

  auto* score = app.add_subcommand("score", "Cosine-score a trial list, optionally with AS-Norm");
  score->add_option("--trials", o.trials)->required()->check(CLI::ExistingFile);
  score->add_option("--embeddings", o.embeddings, "Speaker embeddings")->required()->check(CLI::ExistingFile);
  score->add_option("--cohort", o.cohort, "Cohort embeddings; enables AS-Norm")->check(CLI::ExistingFile);
  score->add_option("--top-k", o.top_k, "AS-Norm cohort size (capped at the cohort)")->check(CLI::PositiveNumber);
  score->add_option("--out", o.out, "Score file (default stdout)");
  add_format(score);
  add_jobs(score);

  auto* eer = app.add_subcommand("eer", "Equal error rate of one score file");
  eer->add_option("--scores", o.scores)->required()->expected(1)->check(CLI::ExistingFile);
  eer->add_option("--det", o.det, "Write the (threshold, P_fa, P_miss) staircase here");

  auto* report = app.add_subcommand("report", "Per-set EER table and the averaged Score");
  report->add_option("--eers", o.eers, "TSV of 'set TAB eer' (fraction or percent)")->check(CLI::ExistingFile);
  report->add_option("--scores", o.scores, "Score files, one set each")->check(CLI::ExistingFile);
  report->add_option("--out", o.out, "Also write the report as TSV");

  auto* fit = app.add_subcommand("osnn-fit", "Fit method centers on the 9/10 part of a 1:9 split");
  fit->add_option("--embeddings", o.embeddings, "Method embeddings")->required()->check(CLI::ExistingFile);
  fit->add_option("--manifest", o.manifest)->required()->check(CLI::ExistingFile);
  fit->add_option("--split", o.split, "Split to fit on (default train)")->check(split_check);
  fit->add_option("--seed", o.seed, "Partition seed");
  fit->add_option("--threshold", o.threshold, "Initial threshold")->check(CLI::Range(0.0, 1.0));
  fit->add_option("--out", o.out, "Model file")->required();
  add_format(fit);

  auto* cal = app.add_subcommand("osnn-calibrate", "Pick the threshold on the 1/10 part of the split");
  cal->add_option("--model", o.model)->required()->check(CLI::ExistingFile);
  cal->add_option("--embeddings", o.embeddings, "Method embeddings")->required()->check(CLI::ExistingFile);
  cal->add_option("--manifest", o.manifest)->required()->check(CLI::ExistingFile);
  cal->add_option("--split", o.split, "Split used for fitting (default train)")->check(split_check);
  cal->add_option("--seed", o.seed, "Partition seed used for fitting");
  cal->add_option("--grid-step", o.grid_step)->check(CLI::Range(0.0, 1.0));
  cal->add_option("--epsilon", o.epsilon, "Accuracy gain (fraction) counted as flat");
  cal->add_option("--window", o.window, "Grid points that must stay flat");
  cal->add_option("--curve", o.curve, "Write the accuracy curve here");
  cal->add_option("--out", o.out, "Updated model (default: overwrite --model)");
  add_format(cal);

  auto* cls = app.add_subcommand("osnn-classify", "Label each embedding with a method or 'unseen'");
  cls->add_option("--model", o.model)->required()->check(CLI::ExistingFile);
  cls->add_option("--embeddings", o.embeddings, "Method embeddings")->required()->check(CLI::ExistingFile);
  cls->add_option("--out", o.out, "Output TSV (default stdout)");
  add_format(cls);

  auto* ev = app.add_subcommand("osnn-eval", "Seen/unseen method recognition accuracy");
  ev->add_option("--model", o.model)->required()->check(CLI::ExistingFile);
  ev->add_option("--embeddings", o.embeddings, "Method embeddings")->required()->check(CLI::ExistingFile);
  ev->add_option("--manifest", o.manifest)->required()->check(CLI::ExistingFile);
  ev->add_option("--split", o.split, "Split to evaluate (default test)")->check(split_check);
  add_format(ev);

  auto* val = app.add_subcommand("validate", "Check toolkit artifacts for consistency");
  val->add_option("--embeddings", o.embeddings)->check(CLI::ExistingFile);
  val->add_option("--manifest", o.manifest)->check(CLI::ExistingFile);
  val->add_option("--trials", o.trials)->check(CLI::ExistingFile);
  val->add_option("--scores", o.scores)->check(CLI::ExistingFile);
  val->add_option("--model", o.model)->check(CLI::ExistingFile);
  add_format(val);

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  if (argv.empty()) argv.push_back("ssvkit");
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
    if (report->parsed() && o.eers.empty() && o.scores.empty()) {
      throw CLI::RequiredError("report needs --eers or --scores");
    }
    if (val->parsed() && o.embeddings.empty() && o.manifest.empty() && o.trials.empty() && o.scores.empty() &&
        o.model.empty()) {
      throw CLI::RequiredError("validate needs at least one artifact");
    }
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::Error& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(o, out, err);
    if (gen->parsed()) return cmd_gen_trials(o, out, err);
    if (score->parsed()) return cmd_score(o, out, err);
    if (eer->parsed()) return cmd_eer(o, out, err);
    if (report->parsed()) return cmd_report(o, out, err);
    if (fit->parsed()) return cmd_osnn_fit(o, out, err);
    if (cal->parsed()) return cmd_osnn_calibrate(o, out, err);
    if (cls->parsed()) return cmd_osnn_classify(o, out, err);
    if (ev->parsed()) return cmd_osnn_eval(o, out, err);
    if (val->parsed()) return cmd_validate(o, out, err);
  } catch (const InfeasibleError& e) {
    err << "error: " << e.what() << " (max feasible " << e.max_feasible() << ")\n";
    return kExitDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitDataError;
  }
  return kExitUsage;
}

}  // namespace ssv::cli
