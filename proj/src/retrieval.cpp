#include "smn/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace smn {

namespace {
constexpr double kBm25K1 = 1.2;
constexpr double kBm25B = 0.75;

constexpr char kIndexMagic[4] = {'S', 'M', 'N', 'I'};
constexpr uint32_t kIndexVersion = 1;
}  // namespace

InvertedIndex InvertedIndex::build(const std::vector<std::string>& responses) {
  if (responses.empty()) throw std::invalid_argument("build_index: empty response stream");
  InvertedIndex index;
  index.store_ = responses;
  index.doc_len_.reserve(responses.size());
  int64_t total_len = 0;
  for (size_t doc = 0; doc < responses.size(); ++doc) {
    const auto tokens = tokenize(responses[doc]);
    index.doc_len_.push_back(static_cast<int>(tokens.size()));
    total_len += static_cast<int64_t>(tokens.size());
    std::unordered_map<std::string, int> tf;
    for (const auto& t : tokens) ++tf[t];
    for (const auto& [token, count] : tf) {
      index.postings_[token].push_back(Posting{static_cast<int32_t>(doc), count});
    }
  }
  // Postings were appended in doc order per token already; keep them sorted.
  for (auto& [token, list] : index.postings_) {
    std::sort(list.begin(), list.end(),
              [](const Posting& a, const Posting& b) { return a.doc < b.doc; });
  }
  index.avg_len_ = static_cast<double>(total_len) / static_cast<double>(responses.size());
  return index;
}

int InvertedIndex::document_frequency(const std::string& token) const {
  auto it = postings_.find(token);
  return it == postings_.end() ? 0 : static_cast<int>(it->second.size());
}

const std::vector<Posting>* InvertedIndex::postings(const std::string& token) const {
  auto it = postings_.find(token);
  return it == postings_.end() ? nullptr : &it->second;
}

void InvertedIndex::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open index for writing: " + path);
  auto write_u32 = [&out](uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    out.write(reinterpret_cast<const char*>(buf), 4);
  };
  out.write(kIndexMagic, 4);
  write_u32(kIndexVersion);
  write_u32(static_cast<uint32_t>(store_.size()));
  out.write(reinterpret_cast<const char*>(&avg_len_), sizeof(double));
  for (size_t doc = 0; doc < store_.size(); ++doc) {
    write_u32(static_cast<uint32_t>(doc_len_[doc]));
    write_u32(static_cast<uint32_t>(store_[doc].size()));
    out.write(store_[doc].data(), static_cast<std::streamsize>(store_[doc].size()));
  }
  write_u32(static_cast<uint32_t>(postings_.size()));
  for (const auto& [token, list] : postings_) {
    write_u32(static_cast<uint32_t>(token.size()));
    out.write(token.data(), static_cast<std::streamsize>(token.size()));
    write_u32(static_cast<uint32_t>(list.size()));
    for (const Posting& p : list) {
      write_u32(static_cast<uint32_t>(p.doc));
      write_u32(static_cast<uint32_t>(p.tf));
    }
  }
  if (!out) throw std::runtime_error("index write failed: " + path);
}

InvertedIndex InvertedIndex::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open index: " + path);
  auto read_u32 = [&in, &path]() {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) throw std::runtime_error("index truncated: " + path);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[i]) << (8 * i);
    return v;
  };
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kIndexMagic, 4)) {
    throw std::runtime_error("bad magic; not an SMN index: " + path);
  }
  if (read_u32() != kIndexVersion) throw std::runtime_error("unsupported index version");

  InvertedIndex index;
  const uint32_t n = read_u32();
  in.read(reinterpret_cast<char*>(&index.avg_len_), sizeof(double));
  index.doc_len_.resize(n);
  index.store_.resize(n);
  for (uint32_t doc = 0; doc < n; ++doc) {
    index.doc_len_[doc] = static_cast<int>(read_u32());
    const uint32_t len = read_u32();
    index.store_[doc].resize(len);
    in.read(index.store_[doc].data(), static_cast<std::streamsize>(len));
  }
  const uint32_t tokens = read_u32();
  for (uint32_t i = 0; i < tokens; ++i) {
    const uint32_t len = read_u32();
    std::string token(len, '\0');
    in.read(token.data(), static_cast<std::streamsize>(len));
    const uint32_t count = read_u32();
    std::vector<Posting> list(count);
    for (uint32_t j = 0; j < count; ++j) {
      list[j].doc = static_cast<int32_t>(read_u32());
      list[j].tf = static_cast<int32_t>(read_u32());
    }
    index.postings_.emplace(std::move(token), std::move(list));
  }
  if (!in) throw std::runtime_error("index truncated: " + path);
  return index;
}

std::vector<Keyword> extract_keywords(const std::vector<std::vector<std::string>>& previous_turns,
                                      const InvertedIndex& index, int count) {
  std::unordered_map<std::string, int> tf;
  for (const auto& turn : previous_turns) {
    for (const auto& token : turn) ++tf[token];
  }
  std::vector<Keyword> scored;
  for (const auto& [token, freq] : tf) {
    const int df = index.document_frequency(token);
    if (df == 0) continue;
    const double idf = std::log(static_cast<double>(index.doc_count()) / df);
    const double score = static_cast<double>(freq) * idf;
    if (score > 0.0) scored.push_back(Keyword{token, score});
  }
  std::sort(scored.begin(), scored.end(), [](const Keyword& a, const Keyword& b) {
    if (a.tfidf != b.tfidf) return a.tfidf > b.tfidf;
    return a.token < b.token;
  });
  if (static_cast<int>(scored.size()) > count) scored.resize(static_cast<size_t>(count));
  return scored;
}

std::vector<std::string> expand_message(const std::vector<std::string>& message,
                                        const std::vector<Keyword>& keywords) {
  std::vector<std::string> query = message;
  for (const Keyword& k : keywords) query.push_back(k.token);
  return query;
}

std::vector<RetrievedCandidate> retrieve(const std::vector<std::string>& query,
                                         const InvertedIndex& index, int top_n) {
  std::unordered_map<int, double> scores;
  const double N = static_cast<double>(index.doc_count());
  for (const std::string& token : query) {
    const std::vector<Posting>* list = index.postings(token);
    if (!list) continue;
    const double df = static_cast<double>(list->size());
    const double idf = std::log((N - df + 0.5) / (df + 0.5) + 1.0);
    for (const Posting& p : *list) {
      const double tf = static_cast<double>(p.tf);
      const double norm =
          kBm25K1 * (1.0 - kBm25B + kBm25B * index.doc_length(p.doc) / index.avg_len());
      scores[p.doc] += idf * (tf * (kBm25K1 + 1.0)) / (tf + norm);
    }
  }
  std::vector<std::pair<int, double>> ranked(scores.begin(), scores.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(ranked.size()) > top_n) ranked.resize(static_cast<size_t>(top_n));

  std::vector<RetrievedCandidate> out;
  out.reserve(ranked.size());
  for (const auto& [doc, score] : ranked) {
    out.push_back(RetrievedCandidate{doc, score, index.document(doc)});
  }
  return out;
}

RespondResult respond(const std::vector<std::vector<std::string>>& context_turns,
                      const InvertedIndex& index, const ModelParams& params,
                      const Vocabulary& vocab, int top_n) {
  if (context_turns.empty()) throw std::invalid_argument("respond: empty context");

  RespondResult result;
  if (context_turns.size() > 1) {
    const std::vector<std::vector<std::string>> previous(context_turns.begin(),
                                                         context_turns.end() - 1);
    result.keywords = extract_keywords(previous, index);
  }
  result.query = expand_message(context_turns.back(), result.keywords);
  std::vector<RetrievedCandidate> candidates = retrieve(result.query, index, top_n);
  if (candidates.empty()) {
    result.has_candidates = false;
    return result;
  }

  const ShapeConfig shape{params.config.max_len, params.config.max_turns};
  const EncodedContext context =
      encode_context(context_turns, vocab, shape.max_turns, shape.max_len);

  result.has_candidates = true;
  int best = 0;
  double best_g = -1.0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    LabeledExample ex;
    ex.context = context;
    ex.response = encode_utterance(tokenize(candidates[i].text), vocab, shape.max_len);
    const double g = forward(ex, params);
    result.ranked.push_back(ScoredCandidate{candidates[i], g});
    if (g > best_g) {  // ties keep the earlier retrieval rank
      best_g = g;
      best = static_cast<int>(i);
    }
  }
  result.doc = result.ranked[static_cast<size_t>(best)].candidate.doc;
  result.response = result.ranked[static_cast<size_t>(best)].candidate.text;
  return result;
}

}  // namespace smn
