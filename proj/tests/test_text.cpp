#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <random>

#include "smn/text.hpp"

using namespace smn;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = "/tmp/smn_text_" + name;
  std::ofstream out(path, std::ios::trunc);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("tokenize splits on whitespace runs") {
  CHECK(tokenize("how are you") == std::vector<std::string>{"how", "are", "you"});
  CHECK(tokenize("") == std::vector<std::string>{});
  CHECK(tokenize("a  b\tc") == std::vector<std::string>{"a", "b", "c"});
  CHECK(tokenize("  leading trailing  ") == std::vector<std::string>{"leading", "trailing"});
}

TEST_CASE("vocabulary keeps frequency order with PAD/UNK reserved") {
  VocabBuilder b;
  b.add(tokenize("a a b"));
  const Vocabulary v = b.build(1, 1 << 20);
  CHECK(v.size() == 4);
  CHECK(v.id(kPadToken) == kPadId);
  CHECK(v.id(kUnkToken) == kUnkId);
  CHECK(v.id("a") == 2);
  CHECK(v.id("b") == 3);
  CHECK(v.token(2) == "a");
}

TEST_CASE("vocabulary min_count can exclude everything") {
  VocabBuilder b;
  b.add(tokenize("a b"));
  const Vocabulary v = b.build(2, 1 << 20);
  CHECK(v.size() == 2);
  CHECK(v.id("a") == kUnkId);
}

TEST_CASE("vocabulary tie-break and cap") {
  // b:2 a:2 c:1; tie between a and b broken lexicographically, c dropped by cap
  VocabBuilder b;
  b.add(tokenize("b b a a c"));
  const Vocabulary v = b.build(1, 4);
  CHECK(v.size() == 4);
  CHECK(v.id("a") == 2);
  CHECK(v.id("b") == 3);
  CHECK_FALSE(v.contains("c"));
}

TEST_CASE("vocabulary frequency-count oracle on a random corpus") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> tok(0, 9);
  std::unordered_map<std::string, int64_t> expected;
  VocabBuilder b;
  for (int line = 0; line < 50; ++line) {
    std::vector<std::string> tokens;
    for (int i = 0; i < 8; ++i) tokens.push_back("w" + std::to_string(tok(rng)));
    for (const auto& t : tokens) ++expected[t];
    b.add(tokens);
  }
  const Vocabulary v = b.build(1, 1 << 20);
  // Most frequent first, ids dense, inverse mapping exact.
  int64_t prev = 1 << 30;
  for (int id = 2; id < v.size(); ++id) {
    const std::string& t = v.token(id);
    CHECK(v.id(t) == id);
    CHECK(expected[t] <= prev);
    prev = expected[t];
  }
  CHECK(v.size() == static_cast<int>(expected.size()) + 2);
}

TEST_CASE("encode_utterance pads, truncates and maps unknowns") {
  VocabBuilder b;
  b.add({"a", "b"});
  const Vocabulary v = b.build(1, 1 << 20);

  const auto short_utt = encode_utterance({"a", "b"}, v, 4);
  CHECK(short_utt.ids == std::vector<int>{2, 3, 0, 0});
  CHECK(short_utt.true_len == 2);

  const auto unk = encode_utterance({"zzz"}, v, 4);
  CHECK(unk.ids == std::vector<int>{1, 0, 0, 0});
  CHECK(unk.true_len == 1);

  std::vector<std::string> sixty(60, "a");
  const auto truncated = encode_utterance(sixty, v, 50);
  CHECK(truncated.true_len == 50);
  CHECK(static_cast<int>(truncated.ids.size()) == 50);
  for (int id : truncated.ids) CHECK(id == 2);
}

TEST_CASE("encode_context left-pads and keeps the last turns") {
  VocabBuilder b;
  b.add({"a"});
  const Vocabulary v = b.build(1, 1 << 20);

  std::vector<std::vector<std::string>> three(3, {"a"});
  const auto ctx = encode_context(three, v, 10, 4);
  CHECK(ctx.true_turns == 3);
  for (int slot = 0; slot < 7; ++slot) CHECK(ctx.slots[slot].true_len == 0);
  for (int slot = 7; slot < 10; ++slot) CHECK(ctx.slots[slot].true_len == 1);

  std::vector<std::vector<std::string>> twelve;
  for (int i = 0; i < 12; ++i) twelve.push_back({"u" + std::to_string(i)});
  const auto trimmed = encode_context(twelve, v, 10, 4);
  CHECK(trimmed.true_turns == 10);
  // last 10 kept: every slot holds a real utterance
  CHECK(trimmed.slots[0].true_len == 1);

  const auto exact = encode_context(std::vector<std::vector<std::string>>(10, {"a"}), v, 10, 4);
  CHECK(exact.true_turns == 10);

  CHECK_THROWS_AS(encode_context({}, v, 10, 4), std::invalid_argument);
}

TEST_CASE("encode round trip over the true length") {
  VocabBuilder b;
  b.add({"w0", "w1", "w2", "w3", "w4"});
  const Vocabulary v = b.build(1, 1 << 20);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> pick(0, 4);
  std::uniform_int_distribution<int> len_dist(0, 8);
  for (int it = 0; it < 100; ++it) {
    const int len = len_dist(rng);
    std::vector<std::string> tokens;
    for (int i = 0; i < len; ++i) tokens.push_back("w" + std::to_string(pick(rng)));
    const auto enc = encode_utterance(tokens, v, 8);
    CHECK(enc.true_len == len);
    for (int i = 0; i < len; ++i) CHECK(v.token(enc.ids[i]) == tokens[i]);
    for (size_t i = static_cast<size_t>(len); i < enc.ids.size(); ++i) CHECK(enc.ids[i] == kPadId);
  }
}

TEST_CASE("load_dataset parses labels and utterances") {
  const auto path = write_temp("ds.txt",
                               "1\thello there\thi\tgood to see you\n"
                               "0\ta\tb\n");
  VocabBuilder b;
  b.add(tokenize("hello there hi good to see you a b"));
  const Vocabulary v = b.build(1, 1 << 20);
  const auto data = load_dataset(path, v, ShapeConfig{6, 4});
  REQUIRE(data.size() == 2);
  CHECK(data[0].label == 1);
  CHECK(data[0].context.true_turns == 2);
  CHECK(data[0].response.true_len == 4);
  CHECK(data[1].label == 0);
  CHECK(data[1].context.true_turns == 1);
}

TEST_CASE("load_dataset rejects malformed lines with line numbers") {
  const Vocabulary v;
  {
    const auto path = write_temp("bad_label.txt", "1\ta\tb\n2\ta\tb\n");
    try {
      load_dataset(path, v, ShapeConfig{4, 2});
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  {
    const auto path = write_temp("short.txt", "0\tonly-one-field\n");
    CHECK_THROWS_AS(load_dataset(path, v, ShapeConfig{4, 2}), ParseError);
  }
}

TEST_CASE("eval dataset carries group ids") {
  const auto path = write_temp("eval.txt",
                               "g1\t1\tctx\tpos\n"
                               "g1\t0\tctx\tneg\n"
                               "g2\t1\tctx two\tresp\n");
  VocabBuilder b;
  b.add(tokenize("ctx pos neg two resp"));
  const Vocabulary v = b.build(1, 1 << 20);
  const auto data = load_eval_dataset(path, v, ShapeConfig{4, 3});
  REQUIRE(data.size() == 3);
  CHECK(data[0].group_id == "g1");
  CHECK(data[1].group_id == "g1");
  CHECK(data[2].group_id == "g2");
  CHECK(data[1].example.label == 0);
}

TEST_CASE("load_embeddings reads word2vec text format") {
  VocabBuilder b;
  b.add({"a", "b"});
  const Vocabulary v = b.build(1, 1 << 20);
  const auto path = write_temp("emb.txt",
                               "2 3\n"
                               "a 0.1 0.2 0.3\n"
                               "zz 9 9 9\n");
  std::mt19937_64 rng(5);
  const EmbeddingTable table = load_embeddings(path, v, 3, rng);
  CHECK(table.matrix.rows() == v.size());
  CHECK(table.matrix(v.id("a"), 0) == doctest::Approx(0.1));
  CHECK(table.matrix(v.id("a"), 2) == doctest::Approx(0.3));
  // missing token: uniform(-0.1, 0.1)
  for (int j = 0; j < 3; ++j) {
    CHECK(std::abs(table.matrix(v.id("b"), j)) <= 0.1);
  }
  CHECK(table.matrix.row(kPadId).cwiseAbs().maxCoeff() == 0.0);

  const auto bad = write_temp("emb_bad.txt", "1 3\na 0.1 0.2\n");
  CHECK_THROWS_AS(load_embeddings(bad, v, 3, rng), ParseError);
  CHECK_THROWS_AS(load_embeddings(path, v, 4, rng), ParseError);
}

TEST_CASE("random embeddings stay within range and zero the PAD row") {
  VocabBuilder b;
  b.add({"a", "b", "c"});
  const Vocabulary v = b.build(1, 1 << 20);
  std::mt19937_64 rng(1);
  const EmbeddingTable table = random_embeddings(v, 4, rng);
  CHECK(table.matrix.row(kPadId).cwiseAbs().maxCoeff() == 0.0);
  CHECK(table.matrix.cwiseAbs().maxCoeff() <= 0.1);
}

TEST_CASE("vocabulary from_tokens round trip") {
  VocabBuilder b;
  b.add({"x", "y"});
  const Vocabulary v = b.build(1, 1 << 20);
  const Vocabulary copy = Vocabulary::from_tokens(v.tokens());
  CHECK(copy.size() == v.size());
  CHECK(copy.id("y") == v.id("y"));
  CHECK_THROWS_AS(Vocabulary::from_tokens({"not-pad", "x"}), std::invalid_argument);
}
