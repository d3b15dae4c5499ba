#include <doctest.h>

#include <cmath>
#include <random>

#include "smn/forward.hpp"
#include "test_helpers.hpp"

using namespace smn;
using namespace smn::testutil;

namespace {

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

}  // namespace

TEST_CASE("readout_last returns the final row") {
  std::mt19937_64 rng(41);
  const Matrix H = random_matrix(10, 4, rng);
  CHECK((readout_last(H) - H.row(9).transpose()).cwiseAbs().maxCoeff() == 0.0);
  const Matrix one = random_matrix(1, 4, rng);
  CHECK((readout_last(one) - one.row(0).transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("readout_static equals readout_last under a one-hot weight, exactly") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    const Matrix H = random_matrix(6, 5, rng, 10.0);
    Matrix w = Matrix::Zero(6, 1);
    w(5, 0) = 1.0;
    const Vector via_static = readout_static(H, w);
    const Vector via_last = readout_last(H);
    CHECK((via_static - via_last).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("readout_static basic combinations") {
  Matrix H(2, 2);
  H << 1, 0, 0, 1;
  Matrix w(2, 1);
  w << 0.5, 0.5;
  const Vector avg = readout_static(H, w);
  CHECK(avg(0) == doctest::Approx(0.5));
  CHECK(avg(1) == doctest::Approx(0.5));

  w.setZero();
  CHECK(readout_static(H, w).cwiseAbs().maxCoeff() == 0.0);

  CHECK_THROWS_AS(readout_static(H, Matrix::Zero(3, 1)), std::invalid_argument);
}

TEST_CASE("readout_dynamic attention") {
  const int n = 4, q = 3, m = 2;
  std::mt19937_64 rng(47);
  ReadoutParams ro;
  ro.W11 = random_matrix(q, m, rng);
  ro.W12 = random_matrix(q, q, rng);
  ro.b1 = random_matrix(q, 1, rng);
  ro.ts = random_matrix(q, 1, rng);
  const Matrix H = random_matrix(n, q, rng);
  const Matrix HuLast = random_matrix(n, m, rng);

  SUBCASE("ts = 0 gives uniform attention") {
    ReadoutParams uniform = ro;
    uniform.ts.setZero();
    AttentionTrace trace;
    const Vector L = readout_dynamic(H, HuLast, uniform, &trace);
    for (int i = 0; i < n; ++i) CHECK(trace.alpha(i) == doctest::Approx(0.25).epsilon(1e-12));
    Vector mean = Vector::Zero(q);
    for (int i = 0; i < n; ++i) mean += H.row(i).transpose() / n;
    CHECK((L - mean).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("n = 1 collapses to the single state") {
    AttentionTrace trace;
    const Vector L = readout_dynamic(H.topRows(1), HuLast.topRows(1), ro, &trace);
    CHECK(trace.alpha(0) == 1.0);
    CHECK((L - H.row(0).transpose()).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("weights sum to one and stay in (0, 1)") {
    for (int trial = 0; trial < 50; ++trial) {
      const Matrix Ht = random_matrix(n, q, rng, 3.0);
      const Matrix Ut = random_matrix(n, m, rng, 3.0);
      AttentionTrace trace;
      readout_dynamic(Ht, Ut, ro, &trace);
      CHECK(std::abs(trace.alpha.sum() - 1.0) <= 1e-12);
      for (int i = 0; i < n; ++i) {
        CHECK(trace.alpha(i) > 0.0);
        CHECK(trace.alpha(i) < 1.0);
      }
    }
  }
  SUBCASE("known two-slot softmax: logits (ln 2, 0)") {
    // Force t . ts = (ln 2, 0) by a handcrafted setup: q = 1.
    ReadoutParams tiny;
    tiny.W11 = Matrix::Zero(1, 1);
    tiny.W12 = Matrix::Zero(1, 1);
    tiny.b1 = Matrix::Zero(1, 1);
    tiny.ts = Matrix::Ones(1, 1);
    Matrix Ht(2, 1);
    // tanh(W12 h') = logits: solve tanh(x) = ln 2 -> pick W12 = 1, h' = atanh(ln 2)
    tiny.W12(0, 0) = 1.0;
    Ht << std::atanh(std::log(2.0)), 0.0;
    AttentionTrace trace;
    const Vector L = readout_dynamic(Ht, Matrix::Zero(2, 1), tiny, &trace);
    CHECK(trace.alpha(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(trace.alpha(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(L(0) == doctest::Approx((2.0 * Ht(0, 0) + Ht(1, 0)) / 3.0).epsilon(1e-9));
  }
  SUBCASE("masked prefix excludes padded slots") {
    AttentionTrace trace;
    readout_dynamic(H, HuLast, ro, &trace, 2);
    CHECK(trace.alpha(0) == 0.0);
    CHECK(trace.alpha(1) == 0.0);
    CHECK(std::abs(trace.alpha.sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("score is the class-1 softmax probability") {
  SUBCASE("symmetric logits") {
    CHECK(score(Vector::Zero(3), Matrix::Zero(2, 3), Matrix::Zero(2, 1)) == 0.5);
  }
  SUBCASE("saturated softmax") {
    Matrix b2(2, 1);
    b2 << 0.0, 20.0;
    CHECK(score(Vector::Zero(3), Matrix::Zero(2, 3), b2) >= 1.0 - 1e-8);
  }
  SUBCASE("scalar logits (0, 1)") {
    Vector L(1);
    L << 1.0;
    Matrix W2(2, 1);
    W2 << 0.0, 1.0;
    const double g = score(L, W2, Matrix::Zero(2, 1));
    CHECK(g == doctest::Approx(std::exp(1.0) / (1.0 + std::exp(1.0))).epsilon(1e-5));
    CHECK(g == doctest::Approx(0.73106).epsilon(1e-4));
  }
  SUBCASE("probabilities sum to one, g strictly inside (0, 1)") {
    // Readout vectors live in (-1, 1)^q (convex combinations of GRU states),
    // so the logits stay bounded.
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 50; ++trial) {
      Vector probs;
      const double g =
          score(random_matrix(4, 1, rng, 1.0).col(0), random_matrix(2, 4, rng, 3.0),
                random_matrix(2, 1, rng, 3.0), nullptr, &probs);
      CHECK(std::abs(probs.sum() - 1.0) <= 1e-12);
      CHECK(g > 0.0);
      CHECK(g < 1.0);
    }
  }
}

TEST_CASE("match_utterance_response with stock defaults hits the shape contract") {
  ModelConfig cfg;  // defaults: 50x50, 3x3 window, 3x3 pool, 8 maps, q = 50
  CHECK(cfg.conv_out_h() == 48);
  CHECK(cfg.pooled_h() == 16);
  CHECK(cfg.flatten_size() == 2048);

  const Vocabulary vocab = tiny_vocab(20);
  cfg.d = 16;  // keep the embedding small; the contract is about the conv stack
  cfg.m = 16;
  const ModelParams params = random_model(cfg, vocab, 99);
  const LabeledExample ex = random_example(cfg, vocab, 7);
  PairTrace trace;
  const Vector v = match_utterance_response(ex.context.slots.back(), ex.response, params, &trace);
  CHECK(v.size() == 50);
  CHECK(trace.flat.size() == 2048);
  CHECK(trace.M1.rows() == 50);
  CHECK(trace.M1.cols() == 50);
}

TEST_CASE("zero projection sends every pair to the zero vector") {
  const ModelConfig cfg = tiny_config();
  const Vocabulary vocab = tiny_vocab();
  ModelParams params = random_model(cfg, vocab, 3);
  params.conv.projection.setZero();
  const LabeledExample ex = random_example(cfg, vocab, 11);
  const Vector v = match_utterance_response(ex.context.slots.back(), ex.response, params);
  CHECK(v.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single-channel config uses only that channel") {
  const Vocabulary vocab = tiny_vocab();
  const ModelConfig both_cfg = tiny_config(ReadoutKind::Last, true, true);
  const ModelConfig m1_cfg = tiny_config(ReadoutKind::Last, true, false);
  ModelParams both = random_model(both_cfg, vocab, 5);

  // Build an M1-only model sharing the word-channel filters and projection.
  ModelParams only_m1 = ModelParams::allocate(m1_cfg, vocab.size());
  only_m1.embeddings = both.embeddings;
  only_m1.gru1 = both.gru1;
  only_m1.A = both.A;
  for (int f = 0; f < m1_cfg.feature_maps; ++f) {
    only_m1.conv.filters[f][0] = both.conv.filters[f][0];
  }
  only_m1.conv.bias = both.conv.bias;
  only_m1.conv.projection = both.conv.projection;
  only_m1.gru2 = both.gru2;
  only_m1.W2 = both.W2;
  only_m1.b2 = both.b2;

  // Zeroing the M2 filters in the two-channel model must reproduce the
  // M1-only pipeline output.
  ModelParams both_m2_dead = both;
  for (int f = 0; f < both_cfg.feature_maps; ++f) both_m2_dead.conv.filters[f][1].setZero();

  const LabeledExample ex = random_example(both_cfg, vocab, 13);
  const Vector v_dead =
      match_utterance_response(ex.context.slots.back(), ex.response, both_m2_dead);
  const Vector v_m1 = match_utterance_response(ex.context.slots.back(), ex.response, only_m1);
  CHECK((v_dead - v_m1).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forward with a zero network scores 0.5") {
  const ModelConfig cfg = tiny_config();
  const Vocabulary vocab = tiny_vocab();
  const ModelParams zeros = ModelParams::allocate(cfg, vocab.size());
  const LabeledExample ex = random_example(cfg, vocab, 17);
  CHECK(forward(ex, zeros) == 0.5);
}

TEST_CASE("forward is bitwise deterministic") {
  for (ReadoutKind kind : {ReadoutKind::Last, ReadoutKind::Static, ReadoutKind::Dynamic}) {
    const ModelConfig cfg = tiny_config(kind);
    const Vocabulary vocab = tiny_vocab();
    const ModelParams params = random_model(cfg, vocab, 19);
    const LabeledExample ex = random_example(cfg, vocab, 23);
    const double a = forward(ex, params);
    const double b = forward(ex, params);
    CHECK(a == b);
  }
}

TEST_CASE("permuting real utterances changes the accumulated sequence") {
  const ModelConfig cfg = tiny_config();
  const Vocabulary vocab = tiny_vocab();
  const ModelParams params = random_model(cfg, vocab, 29);

  LabeledExample ex = random_example(cfg, vocab, 31);
  // Ensure at least two distinct real utterances.
  ex.context = encode_context({{"w1", "w2"}, {"w3", "w4", "w5"}}, vocab, cfg.max_turns,
                              cfg.max_len);
  LabeledExample swapped = ex;
  std::swap(swapped.context.slots[cfg.max_turns - 1], swapped.context.slots[cfg.max_turns - 2]);

  ForwardTrace t1, t2;
  forward(ex, params, &t1);
  forward(swapped, params, &t2);
  CHECK((t1.m1[cfg.max_turns - 1] - t2.m1[cfg.max_turns - 1]).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("forward trace exposes gates in (0,1) and per-slot matrices") {
  const ModelConfig cfg = tiny_config(ReadoutKind::Dynamic);
  const Vocabulary vocab = tiny_vocab();
  const ModelParams params = random_model(cfg, vocab, 37);
  const LabeledExample ex = random_example(cfg, vocab, 41);
  ForwardTrace trace;
  forward(ex, params, &trace);
  CHECK(static_cast<int>(trace.m1.size()) == cfg.max_turns);
  CHECK(trace.update_gates.rows() == cfg.max_turns);
  CHECK(trace.update_gates.minCoeff() > 0.0);
  CHECK(trace.update_gates.maxCoeff() < 1.0);
  CHECK(trace.alpha.size() == cfg.max_turns);
}
