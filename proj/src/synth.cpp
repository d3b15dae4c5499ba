#include "smn/synth.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "smn/text.hpp"

namespace smn {

void SynthConfig::validate() const {
  if (topics < 2) throw std::invalid_argument("synth: need at least 2 topics");
  if (test_negatives >= topics) {
    throw std::invalid_argument("synth: test_negatives must be smaller than topics");
  }
  if (fillers < 1 || turns < 2 || min_words < 1 || max_words < min_words) {
    throw std::invalid_argument("synth: bad shape parameters");
  }
  if (train_contexts < 1 || val_contexts < 0 || test_groups < 0) {
    throw std::invalid_argument("synth: bad corpus sizes");
  }
}

namespace {

std::string padded(const std::string& prefix, int i) {
  std::ostringstream os;
  os << prefix << (i < 10 ? "0" : "") << i;
  return os.str();
}

class Generator {
 public:
  explicit Generator(const SynthConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
    for (int i = 0; i < cfg.topics; ++i) topics_.push_back(padded("topic", i));
    for (int i = 0; i < cfg.fillers; ++i) fillers_.push_back(padded("filler", i));
  }

  int pick_topic() { return std::uniform_int_distribution<int>(0, cfg_.topics - 1)(rng_); }

  int pick_other_topic(int avoid) {
    int t = std::uniform_int_distribution<int>(0, cfg_.topics - 2)(rng_);
    return t >= avoid ? t + 1 : t;
  }

  std::vector<int> pick_distinct_other_topics(int avoid, int count) {
    std::vector<int> pool;
    for (int i = 0; i < cfg_.topics; ++i) {
      if (i != avoid) pool.push_back(i);
    }
    std::shuffle(pool.begin(), pool.end(), rng_);
    pool.resize(static_cast<size_t>(count));
    return pool;
  }

  std::string filler_sentence() {
    const int len = sentence_len();
    std::string out;
    for (int i = 0; i < len; ++i) {
      if (i) out += ' ';
      out += fillers_[static_cast<size_t>(pick_filler())];
    }
    return out;
  }

  std::string sentence_with_topic(int topic) {
    const int len = sentence_len();
    const int slot = std::uniform_int_distribution<int>(0, len - 1)(rng_);
    std::string out;
    for (int i = 0; i < len; ++i) {
      if (i) out += ' ';
      out += i == slot ? topics_[static_cast<size_t>(topic)]
                       : fillers_[static_cast<size_t>(pick_filler())];
    }
    return out;
  }

  // turns utterances; the planted topic sits in the first one only.
  std::vector<std::string> context(int topic) {
    std::vector<std::string> turns;
    turns.push_back(sentence_with_topic(topic));
    for (int i = 1; i < cfg_.turns; ++i) turns.push_back(filler_sentence());
    return turns;
  }

  const std::string& topic_token(int t) const { return topics_[static_cast<size_t>(t)]; }

 private:
  int sentence_len() {
    return std::uniform_int_distribution<int>(cfg_.min_words, cfg_.max_words)(rng_);
  }
  int pick_filler() { return std::uniform_int_distribution<int>(0, cfg_.fillers - 1)(rng_); }

  SynthConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<std::string> topics_;
  std::vector<std::string> fillers_;
};

std::string join_tabs(int label, const std::vector<std::string>& turns,
                      const std::string& response) {
  std::string line = std::to_string(label);
  for (const auto& t : turns) {
    line += '\t';
    line += t;
  }
  line += '\t';
  line += response;
  return line;
}

bool contains_token(const std::vector<std::string>& tokens, const std::string& token) {
  return std::find(tokens.begin(), tokens.end(), token) != tokens.end();
}

}  // namespace

SynthResult write_synthetic_corpus(const SynthConfig& config, const std::string& train_path,
                                   const std::string& val_path, const std::string& test_path) {
  config.validate();
  Generator gen(config);
  SynthResult result;

  {
    std::ofstream out(train_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + train_path);
    for (int i = 0; i < config.train_contexts; ++i) {
      const int topic = gen.pick_topic();
      const auto turns = gen.context(topic);
      out << join_tabs(1, turns, gen.sentence_with_topic(topic)) << "\n";
      out << join_tabs(0, turns, gen.sentence_with_topic(gen.pick_other_topic(topic))) << "\n";
      result.train_lines += 2;
    }
  }
  {
    std::ofstream out(val_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + val_path);
    for (int i = 0; i < config.val_contexts; ++i) {
      const int topic = gen.pick_topic();
      const auto turns = gen.context(topic);
      out << join_tabs(1, turns, gen.sentence_with_topic(topic)) << "\n";
      ++result.val_lines;
      for (int negative_topic : gen.pick_distinct_other_topics(topic, config.test_negatives)) {
        out << join_tabs(0, turns, gen.sentence_with_topic(negative_topic)) << "\n";
        ++result.val_lines;
      }
    }
  }
  std::vector<std::string> planted(static_cast<size_t>(config.test_groups));
  {
    std::ofstream out(test_path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + test_path);
    for (int g = 0; g < config.test_groups; ++g) {
      const int topic = gen.pick_topic();
      planted[static_cast<size_t>(g)] = gen.topic_token(topic);
      const auto turns = gen.context(topic);
      const std::string group = "g" + std::to_string(g);
      out << group << '\t' << join_tabs(1, turns, gen.sentence_with_topic(topic)) << "\n";
      ++result.test_lines;
      for (int negative_topic : gen.pick_distinct_other_topics(topic, config.test_negatives)) {
        out << group << '\t' << join_tabs(0, turns, gen.sentence_with_topic(negative_topic))
            << "\n";
        ++result.test_lines;
      }
    }
  }

  // Self-check: re-read the written test file and confirm the planted
  // property holds for each group.
  result.self_check_ok = true;
  std::ifstream in(test_path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    const size_t tab = line.find('\t');
    const int group = std::stoi(line.substr(1, tab - 1));
    const RawExample raw = parse_dataset_line(line.substr(tab + 1), line_no + 1);
    const std::string& topic = planted[static_cast<size_t>(group)];

    bool in_early_turn = false;
    for (size_t u = 0; u + 1 < raw.utterances.size(); ++u) {
      in_early_turn = in_early_turn || contains_token(raw.utterances[u], topic);
    }
    const bool in_last = contains_token(raw.utterances.back(), topic);
    const bool in_response = contains_token(raw.response, topic);
    const bool ok = raw.label == 1 ? (in_early_turn && in_response && !in_last)
                                   : (in_early_turn && !in_response && !in_last);
    result.self_check_ok = result.self_check_ok && ok;
    ++line_no;
  }
  result.groups_checked = config.test_groups;
  return result;
}

}  // namespace smn
