#include <pybind11/pybind11.h>
#include <pybind11/stl.h>


#include "ssv/embedding_store.hpp"
#include "ssv/error.hpp"
#include "ssv/metrics.hpp"
#include "ssv/osnn.hpp"
#include "ssv/scorer.hpp"
#include "ssv/synth.hpp"
#include "ssv/trial_protocol.hpp"

namespace py = pybind11;
using namespace ssv;

namespace {

Split split_arg(const std::string& name) {
  const auto s = parse_split(name);
  if (!s) throw DataError("python", "unknown split '" + name + "'");
  return *s;
}

py::dict eer_dict(const EerResult& r) {
  py::dict d;
  d["eer"] = r.eer;
  d["threshold"] = r.threshold;
  d["p_fa"] = r.p_fa_at;
  d["p_miss"] = r.p_miss_at;
  d["n_target"] = r.n_target;
  d["n_nontarget"] = r.n_nontarget;
  d["degenerate"] = r.degenerate;
  return d;
}

py::tuple trial_tuple(const Trial& t) {
  return py::make_tuple(t.enroll_utt, t.test_utt, t.scenario, std::string(to_string(t.key)));
}

TrialKey key_arg(const std::string& key) {
  if (key == "target") return TrialKey::target;
  if (key == "nontarget") return TrialKey::nontarget;
  throw DataError("python", "key must be 'target' or 'nontarget', got '" + key + "'");
}

}  // namespace

PYBIND11_MODULE(_ssvkit, m) {
  m.doc() = "Source speaker verification evaluation toolkit";

  auto base = py::register_exception<Error>(m, "SsvError", PyExc_ValueError);
  py::register_exception<InfeasibleError>(m, "InfeasibleError", base.ptr());

  py::class_<EmbeddingStore>(m, "EmbeddingStore")
      .def(py::init<>())
      .def(py::init<std::size_t>(), py::arg("dim"))
      .def("add", &EmbeddingStore::add, py::arg("utt_id"), py::arg("vector"))
      .def("vector", [](const EmbeddingStore& s, const std::string& id) {
        const auto v = s.vector(id);
        return std::vector<float>(v.begin(), v.end());
      })
      .def("ids", [](const EmbeddingStore& s) {
        std::vector<std::string> ids;
        for (const auto& r : s.records()) ids.push_back(r.utt_id);
        return ids;
      })
      .def("__contains__", [](const EmbeddingStore& s, const std::string& id) { return s.find(id) != nullptr; })
      .def("__len__", &EmbeddingStore::size)
      .def_property_readonly("dim", &EmbeddingStore::dim);

  py::class_<Manifest>(m, "Manifest")
      .def(py::init<>())
      .def("add", [](Manifest& man, std::string utt, std::string src, std::string tgt, std::string method,
                     const std::string& split) { man.add({utt, src, tgt, method, split_arg(split)}); },
           py::arg("utt_id"), py::arg("source_speaker"), py::arg("target_speaker"), py::arg("method"),
           py::arg("split"))
      .def("rows", [](const Manifest& man) {
        std::vector<py::tuple> rows;
        for (const auto& e : man.entries()) {
          rows.push_back(py::make_tuple(e.utt_id, e.source_speaker, e.target_speaker, e.method,
                                        std::string(to_string(e.split))));
        }
        return rows;
      })
      .def("__len__", &Manifest::size);

  m.def("load_embeddings", py::overload_cast<const std::string&>(&load_embeddings), py::arg("path"));
  m.def("save_embeddings", [](const EmbeddingStore& s, const std::string& path, const std::string& format) {
    save_embeddings(s, path, format.empty() ? guess_format(path) : format == "text" ? EmbeddingFormat::text
                                                                                    : EmbeddingFormat::binary);
  }, py::arg("store"), py::arg("path"), py::arg("format") = "");
  m.def("load_manifest", &load_manifest, py::arg("path"));
  m.def("save_manifest", &save_manifest, py::arg("manifest"), py::arg("path"));
  m.def("join_validate", [](EmbeddingStore s, const Manifest& man) {
    s.set_manifest(man);
    const auto r = join_validate(s);
    return py::make_tuple(r.missing_manifest, r.missing_embedding);
  }, py::arg("store"), py::arg("manifest"), "Returns (ids missing from the manifest, ids missing a vector).");

  m.def("eligible_pair_counts", [](const Manifest& man, const std::string& split, std::optional<std::string> method) {
    const auto c = eligible_pair_counts(man, split_arg(split), method);
    return std::vector<std::uint64_t>(c.begin(), c.end());
  }, py::arg("manifest"), py::arg("split") = "test", py::arg("method") = py::none());
  m.def("generate_trials", [](const Manifest& man, std::size_t per_scenario, std::uint64_t seed,
                              const std::string& split, std::optional<std::string> method) {
    const auto list = generate_trials(man, {split_arg(split), std::move(method), per_scenario, seed});
    std::vector<py::tuple> out;
    for (const auto& t : list.trials) out.push_back(trial_tuple(t));
    return out;
  }, py::arg("manifest"), py::arg("per_scenario"), py::arg("seed") = 0, py::arg("split") = "test",
        py::arg("method") = py::none(), "Returns (enroll, test, scenario, key) tuples.");

  m.def("cosine", [](const std::vector<double>& a, const std::vector<double>& b) { return cosine(a, b); },
        py::arg("a"), py::arg("b"));
  m.def("score_trials", [](const std::vector<std::tuple<std::string, std::string, int, std::string>>& trials,
                           const EmbeddingStore& store, unsigned jobs) {
    std::vector<Trial> in;
    for (const auto& [e, t, scenario, key] : trials) in.push_back({e, t, scenario, key_arg(key)});
    std::vector<double> out;
    for (const auto& s : score_trials(in, store, jobs)) out.push_back(s.score);
    return out;
  }, py::arg("trials"), py::arg("store"), py::arg("jobs") = 1);

  m.def("compute_eer", [](const std::vector<double>& targets, const std::vector<double>& nontargets) {
    return eer_dict(compute_eer(targets, nontargets));
  }, py::arg("target_scores"), py::arg("nontarget_scores"));
  m.def("challenge_score", [](const std::vector<std::pair<std::string, double>>& sets) {
    return challenge_score(sets).score;
  }, py::arg("per_set_eers"), "Mean of per-set EERs, given as (name, fraction) pairs.");

  m.def("synth", [](const std::map<std::string, std::string>& settings, unsigned jobs) {
    SynthConfig config;
    // n_methods first so a scalar alpha broadcasts to the final count.
    if (auto it = settings.find("n_methods"); it != settings.end()) apply_setting(config, it->first, it->second);
    for (const auto& [k, v] : settings) {
      if (k != "n_methods") apply_setting(config, k, v);
    }
    auto d = generate(config, jobs);
    return py::make_tuple(std::move(d.speaker), std::move(d.method), std::move(d.manifest));
  }, py::arg("settings") = std::map<std::string, std::string>{}, py::arg("jobs") = 1,
        "Returns (speaker store, method store, manifest). Settings use the config-file keys.");

  py::class_<OsnnModel>(m, "OsnnModel")
      .def_readwrite("threshold", &OsnnModel::threshold)
      .def_readonly("dim", &OsnnModel::dim)
      .def_readonly("centers", &OsnnModel::centers)
      .def("classify", [](const OsnnModel& model, const std::vector<double>& x, std::optional<double> threshold) {
        const auto c = classify(model, std::span<const double>(x), threshold.value_or(model.threshold));
        return py::make_tuple(c.label, c.nearest, c.ratio);
      }, py::arg("x"), py::arg("threshold") = py::none(), "Returns (label, nearest, ratio).")
      .def("save", [](const OsnnModel& model, const std::string& path) { save_model(model, path); });

  m.def("load_model", &load_model, py::arg("path"));
  m.def("osnn_fit", [](const EmbeddingStore& store, const Manifest& man, const std::string& split,
                       std::uint64_t seed, bool calibrate) {
    const auto parts = partition_1_9(method_set_from(store, man, split_arg(split)), seed);
    auto model = fit_centers(parts.ts9);
    if (calibrate) model.threshold = calibrate_threshold(model, parts.ts1).threshold;
    return model;
  }, py::arg("store"), py::arg("manifest"), py::arg("split") = "train", py::arg("seed") = 0,
        py::arg("calibrate") = true, "Fits centers on 9/10 of the data and calibrates T on the rest.");
  m.def("osnn_evaluate", [](const OsnnModel& model, const EmbeddingStore& store, const Manifest& man,
                            const std::string& split) {
    const auto a = evaluate_open_set(model, method_set_from(store, man, split_arg(split)));
    return py::make_tuple(a.seen, a.unseen);
  }, py::arg("model"), py::arg("store"), py::arg("manifest"), py::arg("split") = "test",
        "Returns (seen accuracy, unseen accuracy); None where a group is empty.");
}
