#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "smn/forward.hpp"
#include "smn/text.hpp"

namespace smn {

struct Posting {
  int32_t doc = 0;
  int32_t tf = 0;
};

/// Inverted index over a response repository. Immutable after build.
class InvertedIndex {
 public:
  static InvertedIndex build(const std::vector<std::string>& responses);

  int64_t doc_count() const { return static_cast<int64_t>(store_.size()); }
  double avg_len() const { return avg_len_; }
  int document_frequency(const std::string& token) const;
  int vocabulary_size() const { return static_cast<int>(postings_.size()); }
  int doc_length(int doc) const { return doc_len_.at(static_cast<size_t>(doc)); }
  const std::string& document(int doc) const { return store_.at(static_cast<size_t>(doc)); }
  const std::vector<Posting>* postings(const std::string& token) const;

  void save(const std::string& path) const;
  static InvertedIndex load(const std::string& path);

 private:
  std::map<std::string, std::vector<Posting>> postings_;  // ordered for stable serialization
  std::vector<int> doc_len_;
  std::vector<std::string> store_;
  double avg_len_ = 0.0;
};

struct Keyword {
  std::string token;
  double tfidf = 0.0;
};

// tf counted over the previous turns only (the current message is excluded),
// idf = ln(N / df); tokens absent from the index are skipped. Top `count`
// by score, ties broken by ascending token.
std::vector<Keyword> extract_keywords(const std::vector<std::vector<std::string>>& previous_turns,
                                      const InvertedIndex& index, int count = 5);

/// Message tokens followed by the keyword tokens; duplicates allowed.
std::vector<std::string> expand_message(const std::vector<std::string>& message,
                                        const std::vector<Keyword>& keywords);

struct RetrievedCandidate {
  int doc = 0;
  double lexical_score = 0.0;
  std::string text;
};

// Okapi BM25 (k1 = 1.2, b = 0.75, idf = ln((N - df + 0.5) / (df + 0.5) + 1)).
// Repeated query tokens contribute once per occurrence. Ties broken by
// ascending doc id.
std::vector<RetrievedCandidate> retrieve(const std::vector<std::string>& query,
                                         const InvertedIndex& index, int top_n = 10);

struct ScoredCandidate {
  RetrievedCandidate candidate;
  double g = 0.0;  // model matching probability
};

struct RespondResult {
  bool has_candidates = false;
  std::string response;
  int doc = -1;
  std::vector<ScoredCandidate> ranked;  // retrieval order, with model scores
  std::vector<Keyword> keywords;
  std::vector<std::string> query;
};

// The full pipeline: keyword extraction over previous turns, message
// expansion, BM25 retrieval, rerank by g(s, r). Ties on g resolve to the
// better retrieval rank.
RespondResult respond(const std::vector<std::vector<std::string>>& context_turns,
                      const InvertedIndex& index, const ModelParams& params,
                      const Vocabulary& vocab, int top_n = 10);

}  // namespace smn
