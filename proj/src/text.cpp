#include "smn/text.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace smn {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
      if (!current.empty()) {
        tokens.push_back(std::move(current));
        current.clear();
      }
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary::Vocabulary() {
  id_to_token_ = {kPadToken, kUnkToken};
  token_to_id_ = {{kPadToken, kPadId}, {kUnkToken, kUnkId}};
}

Vocabulary Vocabulary::from_counts(const std::unordered_map<std::string, int64_t>& counts,
                                   int min_count, int max_size) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  if (max_size < 2) throw std::invalid_argument("max_size must be >= 2");
  std::vector<std::pair<std::string, int64_t>> kept;
  kept.reserve(counts.size());
  for (const auto& [token, count] : counts) {
    if (count >= min_count) kept.emplace_back(token, count);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  const size_t cap = static_cast<size_t>(max_size) - 2;
  if (kept.size() > cap) kept.resize(cap);

  Vocabulary vocab;
  for (auto& [token, count] : kept) {
    vocab.token_to_id_.emplace(token, static_cast<int>(vocab.id_to_token_.size()));
    vocab.id_to_token_.push_back(token);
  }
  return vocab;
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> id_to_token) {
  if (id_to_token.size() < 2 || id_to_token[0] != kPadToken || id_to_token[1] != kUnkToken) {
    throw std::invalid_argument("vocabulary must start with the PAD and UNK tokens");
  }
  Vocabulary vocab;
  vocab.id_to_token_ = std::move(id_to_token);
  vocab.token_to_id_.clear();
  for (size_t i = 0; i < vocab.id_to_token_.size(); ++i) {
    vocab.token_to_id_.emplace(vocab.id_to_token_[i], static_cast<int>(i));
  }
  return vocab;
}

int Vocabulary::id(const std::string& token) const {
  auto it = token_to_id_.find(token);
  return it == token_to_id_.end() ? kUnkId : it->second;
}

bool Vocabulary::contains(const std::string& token) const {
  return token_to_id_.count(token) > 0;
}

const std::string& Vocabulary::token(int id) const {
  return id_to_token_.at(static_cast<size_t>(id));
}

void VocabBuilder::add(const std::vector<std::string>& tokens) {
  for (const auto& t : tokens) ++counts_[t];
}

Vocabulary VocabBuilder::build(int min_count, int max_size) const {
  return Vocabulary::from_counts(counts_, min_count, max_size);
}

EncodedUtterance encode_utterance(const std::vector<std::string>& tokens,
                                  const Vocabulary& vocab, int max_len) {
  EncodedUtterance out;
  out.ids.assign(static_cast<size_t>(max_len), kPadId);
  out.true_len = std::min<int>(static_cast<int>(tokens.size()), max_len);
  for (int i = 0; i < out.true_len; ++i) {
    out.ids[static_cast<size_t>(i)] = vocab.id(tokens[static_cast<size_t>(i)]);
  }
  return out;
}

EncodedContext encode_context(const std::vector<std::vector<std::string>>& utterances,
                              const Vocabulary& vocab, int max_turns, int max_len) {
  if (utterances.empty()) throw std::invalid_argument("empty context");
  EncodedContext out;
  out.true_turns = std::min<int>(static_cast<int>(utterances.size()), max_turns);
  const size_t first_kept = utterances.size() - static_cast<size_t>(out.true_turns);

  EncodedUtterance pad;
  pad.ids.assign(static_cast<size_t>(max_len), kPadId);
  pad.true_len = 0;
  out.slots.assign(static_cast<size_t>(max_turns), pad);
  for (int i = 0; i < out.true_turns; ++i) {
    const int slot = max_turns - out.true_turns + i;
    out.slots[static_cast<size_t>(slot)] =
        encode_utterance(utterances[first_kept + static_cast<size_t>(i)], vocab, max_len);
  }
  return out;
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

int parse_label(const std::string& field, int line_number) {
  if (field == "0") return 0;
  if (field == "1") return 1;
  throw ParseError("line " + std::to_string(line_number) + ": label must be 0 or 1, got \"" +
                   field + "\"");
}

}  // namespace

RawExample parse_dataset_line(const std::string& line, int line_number) {
  const auto fields = split_tabs(line);
  if (fields.size() < 3) {
    throw ParseError("line " + std::to_string(line_number) +
                     ": expected at least 3 tab-separated fields, got " +
                     std::to_string(fields.size()));
  }
  RawExample ex;
  ex.label = parse_label(fields[0], line_number);
  for (size_t i = 1; i + 1 < fields.size(); ++i) {
    ex.utterances.push_back(tokenize(fields[i]));
  }
  ex.response = tokenize(fields.back());
  return ex;
}

void for_each_raw_example(const std::string& path,
                          const std::function<void(const RawExample&)>& fn) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open dataset file: " + path);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    fn(parse_dataset_line(line, line_number));
  }
}

std::vector<LabeledExample> load_dataset(const std::string& path, const Vocabulary& vocab,
                                         const ShapeConfig& shape) {
  std::vector<LabeledExample> out;
  for_each_raw_example(path, [&](const RawExample& raw) {
    LabeledExample ex;
    ex.label = raw.label;
    ex.context = encode_context(raw.utterances, vocab, shape.max_turns, shape.max_len);
    ex.response = encode_utterance(raw.response, vocab, shape.max_len);
    out.push_back(std::move(ex));
  });
  return out;
}

std::vector<EvalExample> load_eval_dataset(const std::string& path, const Vocabulary& vocab,
                                           const ShapeConfig& shape) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open eval file: " + path);
  std::vector<EvalExample> out;
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    size_t tab = line.find('\t');
    if (tab == std::string::npos) {
      throw ParseError("line " + std::to_string(line_number) + ": missing group id field");
    }
    EvalExample ev;
    ev.group_id = line.substr(0, tab);
    const RawExample raw = parse_dataset_line(line.substr(tab + 1), line_number);
    ev.example.label = raw.label;
    ev.example.context = encode_context(raw.utterances, vocab, shape.max_turns, shape.max_len);
    ev.example.response = encode_utterance(raw.response, vocab, shape.max_len);
    out.push_back(std::move(ev));
  }
  return out;
}

Vocabulary build_vocab_from_dataset(const std::string& path, int min_count, int max_size) {
  VocabBuilder builder;
  for_each_raw_example(path, [&](const RawExample& raw) {
    for (const auto& utt : raw.utterances) builder.add(utt);
    builder.add(raw.response);
  });
  return builder.build(min_count, max_size);
}

EmbeddingTable random_embeddings(const Vocabulary& vocab, int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  EmbeddingTable table;
  table.matrix.resize(vocab.size(), dim);
  for (int i = 0; i < table.matrix.rows(); ++i) {
    for (int j = 0; j < dim; ++j) table.matrix(i, j) = dist(rng);
  }
  table.matrix.row(kPadId).setZero();
  return table;
}

EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab, int dim,
                               std::mt19937_64& rng) {
  EmbeddingTable table = random_embeddings(vocab, dim, rng);
  if (path.empty()) return table;

  std::ifstream in(path);
  if (!in) throw ParseError("cannot open embedding file: " + path);
  std::string header;
  if (!std::getline(in, header)) throw ParseError("embedding file is empty: " + path);
  std::istringstream hs(header);
  int64_t file_count = 0;
  int file_dim = 0;
  if (!(hs >> file_count >> file_dim)) {
    throw ParseError("embedding file header must be \"V d\": " + path);
  }
  if (file_dim != dim) {
    throw ParseError("embedding dimension mismatch: file has " + std::to_string(file_dim) +
                     ", expected " + std::to_string(dim));
  }
  std::string line;
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string token;
    ls >> token;
    Vector vec(dim);
    for (int j = 0; j < dim; ++j) {
      if (!(ls >> vec(j))) {
        throw ParseError("line " + std::to_string(line_number) + ": expected " +
                         std::to_string(dim) + " values for token \"" + token + "\"");
      }
    }
    if (vocab.contains(token)) table.matrix.row(vocab.id(token)) = vec.transpose();
  }
  table.matrix.row(kPadId).setZero();
  return table;
}

}  // namespace smn
