#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>
#include <sstream>

#include "smn/checkpoint.hpp"
#include "smn/metrics.hpp"
#include "smn/retrieval.hpp"
#include "smn/run_config.hpp"
#include "smn/synth.hpp"
#include "smn/training.hpp"

namespace py = pybind11;

namespace {

/// Trained model plus the vocabulary it was trained with.
struct Model {
  smn::ModelParams params;
  smn::Vocabulary vocab;

  static Model load(const std::string& path) {
    smn::Checkpoint ckpt = smn::load_checkpoint(path);
    return Model{std::move(ckpt.params), std::move(ckpt.vocab)};
  }

  void save(const std::string& path) const { smn::save_checkpoint(path, params, vocab); }

  smn::LabeledExample encode(const std::vector<std::string>& context,
                             const std::string& response) const {
    std::vector<std::vector<std::string>> turns;
    turns.reserve(context.size());
    for (const auto& utt : context) turns.push_back(smn::tokenize(utt));
    smn::LabeledExample ex;
    ex.context = smn::encode_context(turns, vocab, params.config.max_turns, params.config.max_len);
    ex.response = smn::encode_utterance(smn::tokenize(response), vocab, params.config.max_len);
    return ex;
  }

  double score(const std::vector<std::string>& context, const std::string& response) const {
    return smn::forward(encode(context, response), params);
  }

  std::vector<double> score_many(const std::vector<std::string>& context,
                                 const std::vector<std::string>& responses) const {
    std::vector<double> out;
    out.reserve(responses.size());
    for (const auto& r : responses) out.push_back(score(context, r));
    return out;
  }

  py::dict config() const {
    const smn::ModelConfig& c = params.config;
    py::dict d;
    d["d"] = c.d;
    d["m"] = c.m;
    d["q"] = c.q;
    d["max_len"] = c.max_len;
    d["max_turns"] = c.max_turns;
    d["window"] = py::make_tuple(c.window_h, c.window_w);
    d["pool"] = py::make_tuple(c.pool_h, c.pool_w);
    d["feature_maps"] = c.feature_maps;
    d["channels"] = c.use_m1 && c.use_m2 ? "both" : (c.use_m1 ? "m1" : "m2");
    d["readout"] = smn::readout_name(c.readout);
    d["vocab_size"] = params.vocab_size();
    return d;
  }
};

std::string value_to_config_string(const py::handle& value) {
  if (py::isinstance<py::bool_>(value)) return value.cast<bool>() ? "true" : "false";
  return py::str(value).cast<std::string>();
}

Model train_files(const std::string& train_path, const std::string& val_path,
                  const py::kwargs& kwargs) {
  smn::RunConfig rc;
  rc.train_path = train_path;
  rc.val_path = val_path;
  for (const auto& item : kwargs) {
    smn::apply_key_value(rc, py::str(item.first).cast<std::string>(),
                         value_to_config_string(item.second));
  }
  rc.model.validate();
  rc.train.validate();

  const smn::Vocabulary vocab =
      smn::build_vocab_from_dataset(rc.train_path, rc.vocab_min_count, rc.vocab_max_size);
  std::mt19937_64 rng(rc.train.seed);
  const smn::EmbeddingTable table =
      smn::load_embeddings(rc.embeddings_path, vocab, rc.model.d, rng);
  smn::ModelParams initial = smn::ModelParams::init(rc.model, table.matrix, rng);

  const smn::ShapeConfig shape{rc.model.max_len, rc.model.max_turns};
  const auto train_set = smn::load_dataset(rc.train_path, vocab, shape);
  std::vector<smn::LabeledExample> val_set;
  if (!rc.val_path.empty()) val_set = smn::load_dataset(rc.val_path, vocab, shape);

  smn::ModelParams best = smn::train(train_set, val_set, std::move(initial), rc.train);
  if (!rc.checkpoint_path.empty()) smn::save_checkpoint(rc.checkpoint_path, best, vocab);
  return Model{std::move(best), vocab};
}

py::dict report_to_dict(const smn::MetricReport& report) {
  py::dict d;
  if (report.map) d["MAP"] = *report.map;
  if (report.mrr) d["MRR"] = *report.mrr;
  if (report.p_at_1) d["P@1"] = *report.p_at_1;
  for (const auto& [nk, value] : report.recall_at) {
    d[("R" + std::to_string(nk.first) + "@" + std::to_string(nk.second)).c_str()] = value;
  }
  d["groups_evaluated"] = report.groups_evaluated;
  d["groups_filtered"] = report.groups_filtered;
  return d;
}

py::dict evaluate_file(const Model& model, const std::string& eval_path) {
  return report_to_dict(smn::evaluate(model.params, model.vocab, eval_path));
}

// groups: [[(score, label), ...], ...]
py::dict metrics_from_groups(const std::vector<std::vector<std::pair<double, int>>>& groups) {
  std::vector<smn::RankedGroup> ranked;
  ranked.reserve(groups.size());
  for (size_t g = 0; g < groups.size(); ++g) {
    smn::RankedGroup group;
    group.group_id = std::to_string(g);
    for (size_t i = 0; i < groups[g].size(); ++i) {
      group.candidates.push_back(
          smn::Candidate{groups[g][i].first, groups[g][i].second, static_cast<int>(i)});
    }
    ranked.push_back(std::move(group));
  }
  return report_to_dict(smn::compute_metrics(std::move(ranked)));
}

py::dict respond_dict(const Model& model, const smn::InvertedIndex& index,
                      const std::vector<std::string>& context, int top_n) {
  std::vector<std::vector<std::string>> turns;
  turns.reserve(context.size());
  for (const auto& utt : context) turns.push_back(smn::tokenize(utt));
  const smn::RespondResult result =
      smn::respond(turns, index, model.params, model.vocab, top_n);
  py::dict d;
  d["has_candidates"] = result.has_candidates;
  d["response"] = result.response;
  d["doc"] = result.doc;
  py::list ranked;
  for (const auto& sc : result.ranked) {
    ranked.append(py::make_tuple(sc.candidate.doc, sc.candidate.lexical_score, sc.g,
                                 sc.candidate.text));
  }
  d["ranked"] = ranked;
  py::list keywords;
  for (const auto& kw : result.keywords) keywords.append(py::make_tuple(kw.token, kw.tfidf));
  d["keywords"] = keywords;
  d["query"] = result.query;
  return d;
}

}  // namespace

PYBIND11_MODULE(_smn, m) {
  m.doc() = "Sequential matching network: response selection, retrieval and ranking metrics";

  m.def("tokenize", &smn::tokenize, py::arg("text"), "Whitespace tokenizer");

  py::class_<smn::Vocabulary>(m, "Vocabulary")
      .def_static(
          "build",
          [](const std::vector<std::string>& lines, int min_count, int max_size) {
            smn::VocabBuilder b;
            for (const auto& line : lines) b.add(smn::tokenize(line));
            return b.build(min_count, max_size);
          },
          py::arg("lines"), py::arg("min_count") = 1, py::arg("max_size") = 50000)
      .def("id", &smn::Vocabulary::id)
      .def("token", &smn::Vocabulary::token)
      .def("contains", &smn::Vocabulary::contains)
      .def("__len__", &smn::Vocabulary::size);

  py::class_<Model>(m, "Model")
      .def_static("load", &Model::load, py::arg("path"))
      .def("save", &Model::save, py::arg("path"))
      .def("score", &Model::score, py::arg("context"), py::arg("response"),
           "Matching probability g(context, response)")
      .def("score_many", &Model::score_many, py::arg("context"), py::arg("responses"))
      .def("config", &Model::config);

  m.def("train", &train_files, py::arg("train"), py::arg("val") = std::string(),
        "Train from dataset files; config keys as keyword arguments "
        "(d, m, q, max_len, max_turns, readout, channels, learning_rate, ...)");

  m.def("evaluate", &evaluate_file, py::arg("model"), py::arg("eval_path"),
        "Score a grouped eval file and compute ranking metrics");
  m.def("metrics", &metrics_from_groups, py::arg("groups"),
        "Ranking metrics over [[(score, label), ...], ...] groups");

  py::class_<smn::InvertedIndex>(m, "Index")
      .def_static("build", &smn::InvertedIndex::build, py::arg("responses"))
      .def_static("load", &smn::InvertedIndex::load, py::arg("path"))
      .def("save", &smn::InvertedIndex::save, py::arg("path"))
      .def_property_readonly("doc_count", &smn::InvertedIndex::doc_count)
      .def("document", &smn::InvertedIndex::document, py::arg("doc"))
      .def("retrieve",
           [](const smn::InvertedIndex& index, const std::vector<std::string>& query, int top_n) {
             py::list out;
             for (const auto& c : smn::retrieve(query, index, top_n)) {
               out.append(py::make_tuple(c.doc, c.lexical_score, c.text));
             }
             return out;
           },
           py::arg("query"), py::arg("top_n") = 10)
      .def("keywords",
           [](const smn::InvertedIndex& index,
              const std::vector<std::vector<std::string>>& previous_turns, int count) {
             py::list out;
             for (const auto& kw : smn::extract_keywords(previous_turns, index, count)) {
               out.append(py::make_tuple(kw.token, kw.tfidf));
             }
             return out;
           },
           py::arg("previous_turns"), py::arg("count") = 5);

  m.def("respond", &respond_dict, py::arg("model"), py::arg("index"), py::arg("context"),
        py::arg("top_n") = 10, "Retrieve candidates and rerank them with the model");

  m.def("synth",
        [](const std::string& train_path, const std::string& val_path,
           const std::string& test_path, const py::kwargs& kwargs) {
          smn::SynthConfig sc;
          for (const auto& item : kwargs) {
            const std::string key = py::str(item.first).cast<std::string>();
            const int value = item.second.cast<int>();
            if (key == "topics") sc.topics = value;
            else if (key == "fillers") sc.fillers = value;
            else if (key == "turns") sc.turns = value;
            else if (key == "train_contexts") sc.train_contexts = value;
            else if (key == "val_contexts") sc.val_contexts = value;
            else if (key == "test_groups") sc.test_groups = value;
            else if (key == "test_negatives") sc.test_negatives = value;
            else if (key == "min_words") sc.min_words = value;
            else if (key == "max_words") sc.max_words = value;
            else if (key == "seed") sc.seed = static_cast<uint64_t>(value);
            else throw std::invalid_argument("unknown synth option: " + key);
          }
          const smn::SynthResult r =
              smn::write_synthetic_corpus(sc, train_path, val_path, test_path);
          py::dict d;
          d["train_lines"] = r.train_lines;
          d["val_lines"] = r.val_lines;
          d["test_lines"] = r.test_lines;
          d["self_check"] = r.self_check_ok;
          return d;
        },
        py::arg("train_path"), py::arg("val_path"), py::arg("test_path"),
        "Generate the planted-keyword synthetic corpus");
}
