#pragma once

#include <vector>

#include "smn/params.hpp"
#include "smn/text.hpp"
#include "smn/types.hpp"

namespace smn {

/// Rows of the embedding table selected by the utterance ids (max_len x d).
Matrix embed(const EncodedUtterance& u, const Matrix& embeddings);

/// Layer-one intermediates of one utterance-response pair.
struct PairTrace {
  Matrix U;   // max_len x d utterance embeddings
  Matrix Hu;  // max_len x m utterance GRU states (empty when unused)
  GruTrace gu;
  Matrix M1, M2;  // empty when the channel is disabled
  std::vector<Matrix> channels;
  std::vector<Matrix> conv_out;  // post-ReLU feature maps
  std::vector<Matrix> pooled;
  Vector flat;
};

// Embeds both sides, encodes them with the first GRU, builds the selected
// similarity channels, then conv -> max pool -> flatten -> linear projection
// to the q-dimensional matching vector (no bias, no nonlinearity).
Vector match_utterance_response(const EncodedUtterance& u, const EncodedUtterance& r,
                                const ModelParams& params, PairTrace* trace = nullptr);

/// Second-layer GRU over the chronological matching vectors. The trace
/// exposes the per-step update gates (z) for inspection.
Matrix accumulate(const Matrix& vs, const GruParams& gru2, GruTrace* trace = nullptr);

Vector readout_last(const Matrix& states);
Vector readout_static(const Matrix& states, const Matrix& w);

struct AttentionTrace {
  Matrix t;       // n x q tanh projections
  Vector logits;  // n
  Vector alpha;   // n
};

// t_i = tanh(W11 h_u_i_last + W12 h'_i + b1), alpha = softmax(t_i . ts),
// output = sum alpha_i h'_i. Slots below masked_prefix are excluded from the
// softmax (0 = attend over every slot, the default behaviour).
Vector readout_dynamic(const Matrix& states, const Matrix& final_utterance_states,
                       const ReadoutParams& readout, AttentionTrace* trace = nullptr,
                       int masked_prefix = 0);

/// Two-class softmax; returns the class-1 probability g(s, r).
double score(const Vector& L, const Matrix& W2, const Matrix& b2, Vector* logits = nullptr,
             Vector* probs = nullptr);

/// Introspection trace (similarity matrices, gates, attention weights).
struct ForwardTrace {
  std::vector<Matrix> m1, m2;  // per slot, empty when the channel is off
  Matrix update_gates;         // max_turns x q accumulation update gates
  Vector alpha;                // dynamic readout only
};

/// Full per-example record kept alive for backpropagation.
struct ForwardWorkspace {
  std::vector<PairTrace> pairs;
  Matrix R;   // response embeddings, shared across slots
  Matrix Hr;  // response GRU states (empty when unused)
  GruTrace gr;
  Matrix vs;  // max_turns x q matching vectors
  GruTrace gru2_trace;
  Matrix acc_states;  // max_turns x q
  Matrix hu_last;     // max_turns x m final utterance states (dynamic only)
  AttentionTrace attn;
  Vector L;
  Vector logits, probs;
  double g = 0.0;
};

double forward(const LabeledExample& example, const ModelParams& params,
               ForwardTrace* trace = nullptr);

double forward_workspace(const LabeledExample& example, const ModelParams& params,
                         ForwardWorkspace& ws);

}  // namespace smn
