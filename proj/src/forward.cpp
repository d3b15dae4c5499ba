#include "smn/forward.hpp"

#include <cmath>
#include <stdexcept>

namespace smn {

Matrix embed(const EncodedUtterance& u, const Matrix& embeddings) {
  Matrix out(static_cast<int>(u.ids.size()), embeddings.cols());
  for (size_t t = 0; t < u.ids.size(); ++t) {
    out.row(static_cast<int>(t)) = embeddings.row(u.ids[t]);
  }
  return out;
}

namespace {

// Layer one from precomputed embeddings/states. Hu/Hr may be null when the
// segment channel is off.
Vector pair_match_core(const Matrix& U, const Matrix* Hu, const Matrix& R, const Matrix* Hr,
                       const ModelParams& params, PairTrace* trace) {
  const ModelConfig& cfg = params.config;
  std::vector<Matrix> channels;
  Matrix M1, M2;
  if (cfg.use_m1) {
    M1 = word_similarity_matrix(U, R);
    channels.push_back(M1);
  }
  if (cfg.use_m2) {
    M2 = segment_similarity_matrix(*Hu, *Hr, params.A);
    channels.push_back(M2);
  }
  std::vector<Matrix> conv_out = conv2d(channels, params.conv);
  std::vector<Matrix> pooled = max_pool(conv_out, cfg.pool_h, cfg.pool_w);
  Vector flat = flatten_maps(pooled);
  if (flat.size() != params.conv.projection.rows()) {
    throw std::invalid_argument("projection rows do not match flattened pool size");
  }
  Vector v = params.conv.projection.transpose() * flat;

  if (trace) {
    trace->M1 = std::move(M1);
    trace->M2 = std::move(M2);
    trace->channels = std::move(channels);
    trace->conv_out = std::move(conv_out);
    trace->pooled = std::move(pooled);
    trace->flat = std::move(flat);
  }
  return v;
}

Vector softmax(const Vector& logits) {
  const double max = logits.maxCoeff();
  Vector e = (logits.array() - max).exp().matrix();
  return e / e.sum();
}

}  // namespace

Vector match_utterance_response(const EncodedUtterance& u, const EncodedUtterance& r,
                                const ModelParams& params, PairTrace* trace) {
  const ModelConfig& cfg = params.config;
  Matrix U = embed(u, params.embeddings);
  Matrix R = embed(r, params.embeddings);
  Matrix Hu, Hr;
  GruTrace gu;
  if (cfg.use_m2) {
    Hu = gru_encode(U, params.gru1, trace ? &gu : nullptr);
    Hr = gru_encode(R, params.gru1);
  }
  Vector v = pair_match_core(U, cfg.use_m2 ? &Hu : nullptr, R, cfg.use_m2 ? &Hr : nullptr,
                             params, trace);
  if (trace) {
    trace->U = std::move(U);
    trace->Hu = std::move(Hu);
    trace->gu = std::move(gu);
  }
  return v;
}

Matrix accumulate(const Matrix& vs, const GruParams& gru2, GruTrace* trace) {
  return gru_encode(vs, gru2, trace);
}

Vector readout_last(const Matrix& states) {
  if (states.rows() < 1) throw std::invalid_argument("readout_last: empty state sequence");
  return states.row(states.rows() - 1).transpose();
}

Vector readout_static(const Matrix& states, const Matrix& w) {
  if (states.rows() != w.rows()) throw std::invalid_argument("readout_static: length mismatch");
  Vector out = Vector::Zero(states.cols());
  for (int i = 0; i < states.rows(); ++i) {
    out += w(i, 0) * states.row(i).transpose();
  }
  return out;
}

Vector readout_dynamic(const Matrix& states, const Matrix& final_utterance_states,
                       const ReadoutParams& readout, AttentionTrace* trace, int masked_prefix) {
  const int n = static_cast<int>(states.rows());
  const int q = static_cast<int>(states.cols());
  if (final_utterance_states.rows() != n || readout.W11.cols() != final_utterance_states.cols() ||
      readout.W12.cols() != q) {
    throw std::invalid_argument("readout_dynamic: shape mismatch");
  }
  Matrix t(n, q);
  Vector logits(n);
  for (int i = 0; i < n; ++i) {
    const Vector pre = readout.W11 * final_utterance_states.row(i).transpose() +
                       readout.W12 * states.row(i).transpose() + readout.b1.col(0);
    t.row(i) = pre.array().tanh().matrix().transpose();
    logits(i) = t.row(i) * readout.ts.col(0);
  }

  Vector alpha = Vector::Zero(n);
  {
    const int lo = std::min(masked_prefix, n - 1);
    const Vector active = logits.segment(lo, n - lo);
    const Vector sm = softmax(active);
    alpha.segment(lo, n - lo) = sm;
  }

  Vector out = Vector::Zero(q);
  for (int i = 0; i < n; ++i) out += alpha(i) * states.row(i).transpose();
  if (trace) {
    trace->t = std::move(t);
    trace->logits = std::move(logits);
    trace->alpha = alpha;
  }
  return out;
}

double score(const Vector& L, const Matrix& W2, const Matrix& b2, Vector* logits_out,
             Vector* probs_out) {
  if (W2.cols() != L.size() || W2.rows() != 2 || b2.rows() != 2) {
    throw std::invalid_argument("score: shape mismatch");
  }
  const Vector logits = W2 * L + b2.col(0);
  const Vector probs = softmax(logits);
  if (logits_out) *logits_out = logits;
  if (probs_out) *probs_out = probs;
  return probs(1);
}

double forward_workspace(const LabeledExample& example, const ModelParams& params,
                         ForwardWorkspace& ws) {
  const ModelConfig& cfg = params.config;
  const int n = cfg.max_turns;
  if (static_cast<int>(example.context.slots.size()) != n) {
    throw std::invalid_argument("forward: context slot count does not match max_turns");
  }
  const bool dynamic = cfg.readout == ReadoutKind::Dynamic;
  const bool need_hu = cfg.use_m2 || dynamic;
  const bool need_hr = cfg.use_m2;

  ws.R = embed(example.response, params.embeddings);
  if (need_hr) {
    ws.Hr = gru_encode(ws.R, params.gru1, &ws.gr);
  } else {
    ws.Hr.resize(0, 0);
  }

  ws.pairs.assign(static_cast<size_t>(n), PairTrace{});
  ws.vs.resize(n, cfg.q);
  if (dynamic) ws.hu_last.resize(n, cfg.m);
  for (int i = 0; i < n; ++i) {
    PairTrace& pt = ws.pairs[static_cast<size_t>(i)];
    pt.U = embed(example.context.slots[static_cast<size_t>(i)], params.embeddings);
    if (need_hu) {
      pt.Hu = gru_encode(pt.U, params.gru1, &pt.gu);
      if (dynamic) ws.hu_last.row(i) = pt.Hu.row(pt.Hu.rows() - 1);
    }
    const Vector v = pair_match_core(pt.U, need_hu ? &pt.Hu : nullptr, ws.R,
                                     need_hr ? &ws.Hr : nullptr, params, &pt);
    ws.vs.row(i) = v.transpose();
  }

  ws.acc_states = accumulate(ws.vs, params.gru2, &ws.gru2_trace);

  switch (cfg.readout) {
    case ReadoutKind::Last:
      ws.L = readout_last(ws.acc_states);
      break;
    case ReadoutKind::Static:
      ws.L = readout_static(ws.acc_states, params.readout.w);
      break;
    case ReadoutKind::Dynamic: {
      const int masked = cfg.mask_attention_pads ? n - example.context.true_turns : 0;
      ws.L = readout_dynamic(ws.acc_states, ws.hu_last, params.readout, &ws.attn, masked);
      break;
    }
  }
  ws.g = score(ws.L, params.W2, params.b2, &ws.logits, &ws.probs);
  return ws.g;
}

double forward(const LabeledExample& example, const ModelParams& params, ForwardTrace* trace) {
  ForwardWorkspace ws;
  const double g = forward_workspace(example, params, ws);
  if (trace) {
    const int n = params.config.max_turns;
    trace->m1.resize(static_cast<size_t>(n));
    trace->m2.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      trace->m1[static_cast<size_t>(i)] = std::move(ws.pairs[static_cast<size_t>(i)].M1);
      trace->m2[static_cast<size_t>(i)] = std::move(ws.pairs[static_cast<size_t>(i)].M2);
    }
    trace->update_gates = ws.gru2_trace.z;
    trace->alpha = ws.attn.alpha;
  }
  return g;
}

}  // namespace smn
