#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "smn/gru.hpp"
#include "smn/matching.hpp"
#include "smn/types.hpp"

namespace smn {

enum class ReadoutKind { Last, Static, Dynamic };

std::string readout_name(ReadoutKind kind);
ReadoutKind readout_from_name(const std::string& name);

struct ModelConfig {
  int d = 200;  // word embedding dimension
  int m = 200;  // utterance GRU hidden size
  int q = 50;   // matching vector / accumulation GRU size
  int max_len = 50;
  int max_turns = 10;
  int window_h = 3, window_w = 3;
  int pool_h = 3, pool_w = 3;
  int feature_maps = 8;
  bool use_m1 = true, use_m2 = true;
  ReadoutKind readout = ReadoutKind::Last;
  bool mask_attention_pads = false;  // dynamic readout only
  bool train_embeddings = true;

  int channel_count() const { return (use_m1 ? 1 : 0) + (use_m2 ? 1 : 0); }
  int conv_out_h() const { return max_len - window_h + 1; }
  int conv_out_w() const { return max_len - window_w + 1; }
  int pooled_h() const { return conv_out_h() / pool_h; }
  int pooled_w() const { return conv_out_w() / pool_w; }
  int flatten_size() const { return feature_maps * pooled_h() * pooled_w(); }

  void validate() const;  // throws std::invalid_argument on bad values
};

struct ReadoutParams {
  Matrix w;             // static: max_turns x 1
  Matrix W11, W12;      // dynamic: q x m, q x q
  Matrix b1, ts;        // dynamic: q x 1
};

/// Every trainable tensor of the model, with a stable enumeration order used
/// by the optimizer, the checkpoint format and the gradient checker.
struct ModelParams {
  ModelConfig config;
  Matrix embeddings;  // V x d, row 0 (PAD) kept at zero
  GruParams gru1;     // d -> m
  Matrix A;           // m x m bilinear form of the segment channel
  ConvParams conv;
  GruParams gru2;     // q -> q
  ReadoutParams readout;
  Matrix W2;  // 2 x q
  Matrix b2;  // 2 x 1

  int vocab_size() const { return static_cast<int>(embeddings.rows()); }

  static ModelParams init(const ModelConfig& config, const Matrix& embedding_matrix,
                          std::mt19937_64& rng);
  /// Zero-valued parameters with the shapes implied by the config.
  static ModelParams allocate(const ModelConfig& config, int vocab_size);
  static ModelParams zeros_like(const ModelParams& other);

  /// Canonical tensor order. Names are stable ("gru1.Wz", "conv.filter.2.0", ...).
  std::vector<std::pair<std::string, Matrix*>> tensors();
  std::vector<std::pair<std::string, const Matrix*>> tensors() const;

  int64_t scalar_count() const;
};

}  // namespace smn
