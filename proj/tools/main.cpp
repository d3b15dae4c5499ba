#include <CLI11.hpp>
#include <json.hpp>

#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "smn/checkpoint.hpp"
#include "smn/metrics.hpp"
#include "smn/retrieval.hpp"
#include "smn/run_config.hpp"
#include "smn/synth.hpp"
#include "smn/training.hpp"

namespace {

using json = nlohmann::json;

constexpr int kExitUsage = 2;
constexpr int kExitDiverged = 3;

struct Override {
  std::string key, value;
};

// Registers a string option that stashes its value as a config override, so
// command-line flags win over the config file in the order given.
void bind_key(CLI::App* cmd, std::vector<Override>& overrides, const std::string& flag,
              const std::string& key, const std::string& description) {
  cmd->add_option_function<std::string>(
      flag, [&overrides, key](const std::string& value) { overrides.push_back({key, value}); },
      description);
}

void bind_model_keys(CLI::App* cmd, std::vector<Override>& o) {
  bind_key(cmd, o, "--d", "d", "word embedding dimension");
  bind_key(cmd, o, "--m", "m", "utterance GRU hidden size");
  bind_key(cmd, o, "--q", "q", "matching vector dimension");
  bind_key(cmd, o, "--max-len", "max_len", "maximum utterance length");
  bind_key(cmd, o, "--max-turns", "max_turns", "maximum context turns");
  bind_key(cmd, o, "--window", "window", "conv window, N or NxM");
  bind_key(cmd, o, "--pool", "pool", "pool window, N or NxM");
  bind_key(cmd, o, "--feature-maps", "feature_maps", "number of feature maps");
  bind_key(cmd, o, "--channels", "channels", "similarity channels: both|m1|m2");
  bind_key(cmd, o, "--readout", "readout", "readout variant: last|static|dynamic");
  bind_key(cmd, o, "--mask-attention-pads", "mask_attention_pads",
           "exclude padded slots from dynamic attention");
  bind_key(cmd, o, "--freeze-embeddings", "freeze_embeddings", "do not fine-tune embeddings");
}

void bind_train_keys(CLI::App* cmd, std::vector<Override>& o) {
  bind_key(cmd, o, "--lr", "learning_rate", "Adam learning rate");
  bind_key(cmd, o, "--beta1", "beta1", "Adam beta1");
  bind_key(cmd, o, "--beta2", "beta2", "Adam beta2");
  bind_key(cmd, o, "--epsilon", "epsilon", "Adam epsilon");
  bind_key(cmd, o, "--batch-size", "batch_size", "mini-batch size");
  bind_key(cmd, o, "--max-epochs", "max_epochs", "maximum training epochs");
  bind_key(cmd, o, "--patience", "patience", "early-stopping patience (evaluations)");
  bind_key(cmd, o, "--eval-every", "eval_every", "steps between evaluations (0 = per epoch)");
  bind_key(cmd, o, "--vocab-min-count", "vocab_min_count", "vocabulary frequency threshold");
  bind_key(cmd, o, "--vocab-max-size", "vocab_max_size", "vocabulary size cap");
}

smn::RunConfig resolve_config(const std::string& config_path,
                              const std::vector<Override>& overrides, const std::string& seed) {
  smn::RunConfig rc;
  if (!config_path.empty()) smn::apply_config_file(rc, config_path);
  for (const Override& o : overrides) smn::apply_key_value(rc, o.key, o.value);
  if (!seed.empty()) smn::apply_key_value(rc, "seed", seed);
  return rc;
}

int cmd_train(const smn::RunConfig& rc) {
  if (rc.train_path.empty()) throw smn::ConfigError("train: no training file given (--train)");
  if (rc.checkpoint_path.empty()) {
    throw smn::ConfigError("train: no checkpoint path given (--checkpoint)");
  }
  rc.model.validate();
  rc.train.validate();

  const smn::Vocabulary vocab =
      smn::build_vocab_from_dataset(rc.train_path, rc.vocab_min_count, rc.vocab_max_size);
  std::cerr << "vocabulary: " << vocab.size() << " tokens\n";

  std::mt19937_64 rng(rc.train.seed);
  const smn::EmbeddingTable table =
      smn::load_embeddings(rc.embeddings_path, vocab, rc.model.d, rng);
  smn::ModelParams initial = smn::ModelParams::init(rc.model, table.matrix, rng);

  const smn::ShapeConfig shape{rc.model.max_len, rc.model.max_turns};
  const auto train_set = smn::load_dataset(rc.train_path, vocab, shape);
  std::vector<smn::LabeledExample> val_set;
  if (!rc.val_path.empty()) val_set = smn::load_dataset(rc.val_path, vocab, shape);
  std::cerr << "train: " << train_set.size() << " examples, val: " << val_set.size() << "\n";

  const std::string log_path =
      rc.log_path.empty() ? rc.checkpoint_path + ".log" : rc.log_path;
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw smn::ConfigError("cannot open log file: " + log_path);

  smn::TrainHistory history;
  const smn::ModelParams best = smn::train(train_set, val_set, std::move(initial), rc.train,
                                           &history, &log);
  if (history.best_eval >= 0) {
    log << "best step=" << history.evals[history.best_eval].step
        << " val_loss=" << history.best_val_loss << "\n";
  }
  smn::save_checkpoint(rc.checkpoint_path, best, vocab);
  std::cerr << "checkpoint written to " << rc.checkpoint_path << " (log: " << log_path << ")\n";
  return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& eval_path,
             const std::string& metrics_csv, bool as_json) {
  const smn::Checkpoint ckpt = smn::load_checkpoint(checkpoint_path);
  const smn::MetricReport report = smn::evaluate(ckpt.params, ckpt.vocab, eval_path);
  std::vector<std::string> which;
  if (!metrics_csv.empty()) {
    std::string token;
    std::istringstream in(metrics_csv);
    while (std::getline(in, token, ',')) {
      if (!token.empty()) which.push_back(token);
    }
  }
  if (as_json) {
    std::cout << smn::report_json(report, which) << "\n";
  } else {
    std::cout << smn::report_table(report);
  }
  return 0;
}

int cmd_index(const std::string& corpus_path, const std::string& out_path, bool as_json) {
  std::ifstream in(corpus_path);
  if (!in) throw smn::ConfigError("cannot open corpus: " + corpus_path);
  std::vector<std::string> responses;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) responses.push_back(line);
  }
  if (responses.empty()) throw smn::ConfigError("corpus is empty: " + corpus_path);
  const smn::InvertedIndex index = smn::InvertedIndex::build(responses);
  index.save(out_path);
  if (as_json) {
    std::cout << json{{"documents", index.doc_count()},
                      {"vocabulary", index.vocabulary_size()},
                      {"avg_len", index.avg_len()}}
                     .dump()
              << "\n";
  } else {
    std::cout << "indexed " << index.doc_count() << " responses, "
              << index.vocabulary_size() << " distinct tokens\n";
  }
  return 0;
}

void print_trace(const smn::RespondResult& last) {
  std::cout << "keywords:";
  for (const auto& kw : last.keywords) std::cout << " " << kw.token;
  std::cout << "\nquery:";
  for (const auto& t : last.query) std::cout << " " << t;
  std::cout << "\n";
  for (size_t i = 0; i < last.ranked.size(); ++i) {
    const auto& sc = last.ranked[i];
    std::cout << "#" << i + 1 << " g=" << sc.g << " bm25=" << sc.candidate.lexical_score << " "
              << sc.candidate.text << "\n";
  }
}

int cmd_chat(const std::string& checkpoint_path, const std::string& index_path, int top_n) {
  const smn::Checkpoint ckpt = smn::load_checkpoint(checkpoint_path);
  const smn::InvertedIndex index = smn::InvertedIndex::load(index_path);
  const int window = ckpt.params.config.max_turns;

  std::deque<std::vector<std::string>> turns;
  smn::RespondResult last;
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line == ":quit") break;
    if (line == ":trace") {
      print_trace(last);
      continue;
    }
    const auto tokens = smn::tokenize(line);
    if (tokens.empty()) continue;
    turns.push_back(tokens);
    while (static_cast<int>(turns.size()) > window) turns.pop_front();

    last = smn::respond({turns.begin(), turns.end()}, index, ckpt.params, ckpt.vocab, top_n);
    if (!last.has_candidates) {
      std::cout << "[no-candidates]\n";
      continue;
    }
    std::cout << last.response << "\n";
    turns.push_back(smn::tokenize(last.response));
    while (static_cast<int>(turns.size()) > window) turns.pop_front();
  }
  return 0;
}

void write_csv(const std::string& path, const smn::Matrix& m) {
  std::ofstream out(path, std::ios::trunc);
  out.precision(17);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out << ",";
      out << m(i, j);
    }
    out << "\n";
  }
}

int cmd_inspect(const std::string& checkpoint_path, const std::string& example_path,
                const std::string& out_dir, bool full_gates) {
  const smn::Checkpoint ckpt = smn::load_checkpoint(checkpoint_path);
  const smn::ModelConfig& cfg = ckpt.params.config;
  const smn::ShapeConfig shape{cfg.max_len, cfg.max_turns};
  const auto examples = smn::load_dataset(example_path, ckpt.vocab, shape);
  if (examples.size() != 1) {
    throw smn::ConfigError("inspect expects exactly one example, file has " +
                           std::to_string(examples.size()));
  }
  std::filesystem::create_directories(out_dir);

  smn::ForwardTrace trace;
  const double g = smn::forward(examples[0], ckpt.params, &trace);

  auto slot_name = [](int slot, const char* channel) {
    std::ostringstream os;
    os << "slot" << (slot < 10 ? "0" : "") << slot << "_" << channel << ".csv";
    return os.str();
  };

  json trace_json;
  trace_json["g"] = g;
  const int first_real = cfg.max_turns - examples[0].context.true_turns;
  for (int slot = first_real; slot < cfg.max_turns; ++slot) {
    json slot_json;
    if (cfg.use_m1) {
      const std::string name = slot_name(slot, "M1");
      write_csv(out_dir + "/" + name, trace.m1[static_cast<size_t>(slot)]);
      slot_json["M1"] = name;
    }
    if (cfg.use_m2) {
      const std::string name = slot_name(slot, "M2");
      write_csv(out_dir + "/" + name, trace.m2[static_cast<size_t>(slot)]);
      slot_json["M2"] = name;
    }
    slot_json["update_gate_mean"] = json::array({trace.update_gates.row(slot).mean()});
    if (cfg.readout == smn::ReadoutKind::Dynamic) {
      slot_json["alpha"] = trace.alpha(slot);
    } else {
      slot_json["alpha"] = nullptr;
    }
    trace_json["slots"][std::to_string(slot)] = slot_json;
  }

  json gates;
  gates["update_gate_mean"] = json::array();
  for (int slot = 0; slot < cfg.max_turns; ++slot) {
    gates["update_gate_mean"].push_back(trace.update_gates.row(slot).mean());
  }
  if (full_gates) {
    gates["update_gate"] = json::array();
    for (int slot = 0; slot < cfg.max_turns; ++slot) {
      json row = json::array();
      for (int j = 0; j < trace.update_gates.cols(); ++j) {
        row.push_back(trace.update_gates(slot, j));
      }
      gates["update_gate"].push_back(row);
    }
  }
  std::ofstream(out_dir + "/gates.json") << gates.dump(2) << "\n";

  if (cfg.readout == smn::ReadoutKind::Dynamic) {
    json alpha;
    alpha["alpha"] = json::array();
    for (int slot = 0; slot < cfg.max_turns; ++slot) alpha["alpha"].push_back(trace.alpha(slot));
    std::ofstream(out_dir + "/alpha.json") << alpha.dump(2) << "\n";
  }
  std::ofstream(out_dir + "/trace.json") << trace_json.dump(2) << "\n";
  std::cout << "g=" << g << " artifacts in " << out_dir << "\n";
  return 0;
}

int cmd_synth(const smn::SynthConfig& sc, const std::string& train_path,
              const std::string& val_path, const std::string& test_path, bool as_json) {
  const smn::SynthResult result = smn::write_synthetic_corpus(sc, train_path, val_path, test_path);
  if (as_json) {
    std::cout << json{{"train_lines", result.train_lines},
                      {"val_lines", result.val_lines},
                      {"test_lines", result.test_lines},
                      {"self_check", result.self_check_ok ? "pass" : "fail"},
                      {"groups_checked", result.groups_checked}}
                     .dump()
              << "\n";
  } else {
    std::cout << "train: " << result.train_lines << " lines, val: " << result.val_lines
              << " lines, test: " << result.test_lines << " lines\n";
    std::cout << "self-check " << (result.self_check_ok ? "pass" : "FAIL") << " ("
              << result.groups_checked << " groups)\n";
  }
  return result.self_check_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential matching network for multi-turn response selection"};
  app.require_subcommand(1);

  std::string config_path, seed_override;
  bool as_json = false;
  app.add_option("--config", config_path, "key = value configuration file")->expected(1);
  app.add_option("--seed", seed_override, "random seed override");
  app.add_flag("--json", as_json, "machine-readable output where supported");

  std::vector<Override> overrides;

  auto* train_cmd = app.add_subcommand("train", "train a model and write a checkpoint");
  train_cmd->fallthrough();
  bind_model_keys(train_cmd, overrides);
  bind_train_keys(train_cmd, overrides);
  bind_key(train_cmd, overrides, "--train", "train", "training dataset file");
  bind_key(train_cmd, overrides, "--val", "val", "validation dataset file");
  bind_key(train_cmd, overrides, "--embeddings", "embeddings", "word2vec text embeddings");
  bind_key(train_cmd, overrides, "--checkpoint", "checkpoint", "output checkpoint path");
  bind_key(train_cmd, overrides, "--log", "log", "training log path");

  auto* eval_cmd = app.add_subcommand("eval", "score an eval file and print ranking metrics");
  eval_cmd->fallthrough();
  std::string eval_checkpoint, eval_file, metrics_csv;
  eval_cmd->add_option("checkpoint", eval_checkpoint, "model checkpoint")->required();
  eval_cmd->add_option("eval_file", eval_file, "grouped eval file")->required();
  eval_cmd->add_option("--metrics", metrics_csv, "comma-separated metric subset");

  auto* index_cmd = app.add_subcommand("index", "build a response index");
  index_cmd->fallthrough();
  std::string corpus_path, index_out;
  index_cmd->add_option("corpus", corpus_path, "one response per line")->required();
  index_cmd->add_option("out", index_out, "index output path")->required();

  auto* chat_cmd = app.add_subcommand("chat", "interactive retrieval + rerank loop");
  chat_cmd->fallthrough();
  std::string chat_checkpoint, chat_index;
  int chat_top_n = 10;
  chat_cmd->add_option("checkpoint", chat_checkpoint)->required();
  chat_cmd->add_option("index", chat_index)->required();
  chat_cmd->add_option("--top-n", chat_top_n, "candidates retrieved per turn");

  auto* inspect_cmd = app.add_subcommand("inspect", "export similarity matrices and gates");
  inspect_cmd->fallthrough();
  std::string inspect_checkpoint, inspect_example, inspect_out;
  bool full_gates = false;
  inspect_cmd->add_option("checkpoint", inspect_checkpoint)->required();
  inspect_cmd->add_option("example", inspect_example, "single-example dataset file")->required();
  inspect_cmd->add_option("out_dir", inspect_out)->required();
  inspect_cmd->add_flag("--full-gates", full_gates, "also export full gate vectors");

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  synth_cmd->fallthrough();
  smn::SynthConfig sc;
  std::string synth_train = "synth_train.txt", synth_val = "synth_val.txt",
              synth_test = "synth_test.txt";
  synth_cmd->add_option("--out-train", synth_train);
  synth_cmd->add_option("--out-val", synth_val);
  synth_cmd->add_option("--out-test", synth_test);
  synth_cmd->add_option("--topics", sc.topics);
  synth_cmd->add_option("--fillers", sc.fillers);
  synth_cmd->add_option("--turns", sc.turns);
  synth_cmd->add_option("--train-contexts", sc.train_contexts);
  synth_cmd->add_option("--val-contexts", sc.val_contexts);
  synth_cmd->add_option("--groups", sc.test_groups);
  synth_cmd->add_option("--negatives", sc.test_negatives);
  synth_cmd->add_option("--min-words", sc.min_words);
  synth_cmd->add_option("--max-words", sc.max_words);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train_cmd->parsed()) {
      return cmd_train(resolve_config(config_path, overrides, seed_override));
    }
    if (eval_cmd->parsed()) return cmd_eval(eval_checkpoint, eval_file, metrics_csv, as_json);
    if (index_cmd->parsed()) return cmd_index(corpus_path, index_out, as_json);
    if (chat_cmd->parsed()) return cmd_chat(chat_checkpoint, chat_index, chat_top_n);
    if (inspect_cmd->parsed()) {
      return cmd_inspect(inspect_checkpoint, inspect_example, inspect_out, full_gates);
    }
    if (synth_cmd->parsed()) {
      if (!seed_override.empty()) sc.seed = std::stoull(seed_override);
      return cmd_synth(sc, synth_train, synth_val, synth_test, as_json);
    }
  } catch (const smn::TrainingDiverged& e) {
    std::cerr << "error: training diverged: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
