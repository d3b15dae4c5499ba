#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "smn/types.hpp"

namespace smn {

inline constexpr int kPadId = 0;
inline constexpr int kUnkId = 1;
inline constexpr const char* kPadToken = "__pad__";
inline constexpr const char* kUnkToken = "__unk__";

/// Splits on whitespace runs. Corpora are pre-tokenized, so no case folding.
std::vector<std::string> tokenize(const std::string& text);

class Vocabulary {
 public:
  // PAD and UNK only.
  Vocabulary();

  // Token kept if frequency >= min_count, most frequent first, frequency ties
  // broken lexicographically, capped at max_size entries including PAD/UNK.
  static Vocabulary from_counts(const std::unordered_map<std::string, int64_t>& counts,
                                int min_count, int max_size);

  // Rebuild from a dense id -> token list (checkpoint loading).
  static Vocabulary from_tokens(std::vector<std::string> id_to_token);

  int id(const std::string& token) const;  // kUnkId when absent
  bool contains(const std::string& token) const;
  const std::string& token(int id) const;
  int size() const { return static_cast<int>(id_to_token_.size()); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
};

/// Streaming frequency counter feeding Vocabulary::from_counts.
class VocabBuilder {
 public:
  void add(const std::vector<std::string>& tokens);
  Vocabulary build(int min_count = 1, int max_size = 1 << 30) const;

 private:
  std::unordered_map<std::string, int64_t> counts_;
};

struct EncodedUtterance {
  std::vector<int> ids;  // length == max_len, PAD-filled past true_len
  int true_len = 0;
};

struct EncodedContext {
  std::vector<EncodedUtterance> slots;  // size == max_turns, real turns last
  int true_turns = 0;
};

struct LabeledExample {
  EncodedContext context;
  EncodedUtterance response;
  int label = 0;
};

struct ShapeConfig {
  int max_len = 50;
  int max_turns = 10;
};

// Over-long utterances keep the first max_len tokens; short ones are
// right-padded with PAD.
EncodedUtterance encode_utterance(const std::vector<std::string>& tokens,
                                  const Vocabulary& vocab, int max_len);

// Contexts longer than max_turns keep the last max_turns utterances; shorter
// ones are left-padded with all-PAD utterances so the real last utterance
// always sits at slot max_turns - 1.
EncodedContext encode_context(const std::vector<std::vector<std::string>>& utterances,
                              const Vocabulary& vocab, int max_turns, int max_len);

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RawExample {
  int label = 0;
  std::vector<std::vector<std::string>> utterances;
  std::vector<std::string> response;
};

// Dataset line: label TAB utt_1 TAB ... TAB utt_k TAB response.
RawExample parse_dataset_line(const std::string& line, int line_number);

void for_each_raw_example(const std::string& path,
                          const std::function<void(const RawExample&)>& fn);

std::vector<LabeledExample> load_dataset(const std::string& path, const Vocabulary& vocab,
                                         const ShapeConfig& shape);

struct EvalExample {
  std::string group_id;
  LabeledExample example;
};

// Eval line: group_id TAB label TAB utt_1 ... TAB response.
std::vector<EvalExample> load_eval_dataset(const std::string& path, const Vocabulary& vocab,
                                           const ShapeConfig& shape);

/// Vocabulary over every context and response token of a dataset file.
Vocabulary build_vocab_from_dataset(const std::string& path, int min_count, int max_size);

struct EmbeddingTable {
  Matrix matrix;  // V x d, row 0 (PAD) all zeros
  bool trainable = true;
};

// word2vec text format: header "V d", then token followed by d decimals per
// line. Vocab tokens missing from the file (or the whole table when path is
// empty) are drawn uniform(-0.1, 0.1). PAD row is forced to zero.
EmbeddingTable load_embeddings(const std::string& path, const Vocabulary& vocab, int dim,
                               std::mt19937_64& rng);

EmbeddingTable random_embeddings(const Vocabulary& vocab, int dim, std::mt19937_64& rng);

}  // namespace smn
