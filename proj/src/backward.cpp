#include <cmath>
#include <stdexcept>

#include "smn/training.hpp"

namespace smn {

namespace {
constexpr double kProbFloor = 1e-12;

double clamp_prob(double g) {
  if (g < kProbFloor) return kProbFloor;
  if (g > 1.0 - kProbFloor) return 1.0 - kProbFloor;
  return g;
}
}  // namespace

double example_loss(int label, double g) {
  const double p = clamp_prob(g);
  return -(label * std::log(p) + (1 - label) * std::log(1.0 - p));
}

double example_loss_and_gradients(const LabeledExample& example, const ModelParams& params,
                                  ModelParams& grads) {
  const ModelConfig& cfg = params.config;
  const int n = cfg.max_turns;
  const bool dynamic = cfg.readout == ReadoutKind::Dynamic;
  const bool need_hu = cfg.use_m2 || dynamic;
  const bool need_hr = cfg.use_m2;

  ForwardWorkspace ws;
  forward_workspace(example, params, ws);

  // Output layer: softmax cross entropy.
  Vector dlogits = ws.probs;
  dlogits(example.label) -= 1.0;
  grads.W2.noalias() += dlogits * ws.L.transpose();
  grads.b2.col(0) += dlogits;
  Vector dL = params.W2.transpose() * dlogits;

  // Readout.
  Matrix d_acc = Matrix::Zero(n, cfg.q);
  Matrix d_hu_last;
  switch (cfg.readout) {
    case ReadoutKind::Last:
      d_acc.row(n - 1) = dL.transpose();
      break;
    case ReadoutKind::Static:
      for (int i = 0; i < n; ++i) {
        d_acc.row(i) += params.readout.w(i, 0) * dL.transpose();
        grads.readout.w(i, 0) += dL.dot(ws.acc_states.row(i));
      }
      break;
    case ReadoutKind::Dynamic: {
      d_hu_last = Matrix::Zero(n, cfg.m);
      const Vector& alpha = ws.attn.alpha;
      Vector dalpha(n);
      for (int i = 0; i < n; ++i) {
        dalpha(i) = dL.dot(ws.acc_states.row(i));
        d_acc.row(i) += alpha(i) * dL.transpose();
      }
      // Softmax: dlogit_i = alpha_i (dalpha_i - sum_j alpha_j dalpha_j).
      // Masked slots have alpha = 0 and drop out on their own.
      const double mix = alpha.dot(dalpha);
      const Vector dlogit = (alpha.array() * (dalpha.array() - mix)).matrix();
      for (int i = 0; i < n; ++i) {
        if (dlogit(i) == 0.0 && alpha(i) == 0.0) continue;
        grads.readout.ts.col(0) += dlogit(i) * ws.attn.t.row(i).transpose();
        const Vector dt = dlogit(i) * params.readout.ts.col(0);
        const Vector dpre =
            ((1.0 - ws.attn.t.row(i).transpose().array().square()) * dt.array()).matrix();
        grads.readout.W11.noalias() += dpre * ws.hu_last.row(i);
        grads.readout.W12.noalias() += dpre * ws.acc_states.row(i);
        grads.readout.b1.col(0) += dpre;
        d_hu_last.row(i) += (params.readout.W11.transpose() * dpre).transpose();
        d_acc.row(i) += (params.readout.W12.transpose() * dpre).transpose();
      }
      break;
    }
  }

  // Accumulation GRU.
  const Matrix d_vs = gru_backward(ws.vs, ws.gru2_trace, d_acc, params.gru2, grads.gru2);

  // Layer one, slot by slot. Response-side gradients are accumulated across
  // slots and pushed through the shared response encoding once at the end.
  Matrix dR_total = Matrix::Zero(ws.R.rows(), ws.R.cols());
  Matrix dHr_total;
  if (need_hr) dHr_total = Matrix::Zero(ws.Hr.rows(), ws.Hr.cols());

  for (int i = 0; i < n; ++i) {
    PairTrace& pt = ws.pairs[static_cast<size_t>(i)];
    const Vector dv = d_vs.row(i).transpose();

    grads.conv.projection.noalias() += pt.flat * dv.transpose();
    const Vector dflat = params.conv.projection * dv;

    const int ph = cfg.pooled_h();
    const int pw = cfg.pooled_w();
    std::vector<Matrix> d_pooled(static_cast<size_t>(cfg.feature_maps));
    int k = 0;
    for (int f = 0; f < cfg.feature_maps; ++f) {
      Matrix dp(ph, pw);
      for (int a = 0; a < ph; ++a) {
        for (int b = 0; b < pw; ++b) dp(a, b) = dflat(k++);
      }
      d_pooled[static_cast<size_t>(f)] = std::move(dp);
    }

    const std::vector<Matrix> d_conv_out =
        max_pool_backward(pt.conv_out, pt.pooled, d_pooled, cfg.pool_h, cfg.pool_w);
    const std::vector<Matrix> d_channels =
        conv2d_backward(pt.channels, pt.conv_out, d_conv_out, params.conv, grads.conv);

    Matrix dU = Matrix::Zero(pt.U.rows(), pt.U.cols());
    Matrix dHu;
    if (need_hu) dHu = Matrix::Zero(pt.Hu.rows(), pt.Hu.cols());

    size_t ch = 0;
    if (cfg.use_m1) {
      const Matrix& dM1 = d_channels[ch++];
      dU.noalias() += dM1 * ws.R;
      dR_total.noalias() += dM1.transpose() * pt.U;
    }
    if (cfg.use_m2) {
      const Matrix& dM2 = d_channels[ch++];
      dHu.noalias() += dM2 * ws.Hr * params.A.transpose();
      dHr_total.noalias() += dM2.transpose() * pt.Hu * params.A;
      grads.A.noalias() += pt.Hu.transpose() * dM2 * ws.Hr;
    }
    if (dynamic) dHu.row(dHu.rows() - 1) += d_hu_last.row(i);

    if (need_hu) {
      dU += gru_backward(pt.U, pt.gu, dHu, params.gru1, grads.gru1);
    }
    const auto& ids = example.context.slots[static_cast<size_t>(i)].ids;
    for (size_t t = 0; t < ids.size(); ++t) {
      grads.embeddings.row(ids[t]) += dU.row(static_cast<int>(t));
    }
  }

  if (need_hr) {
    dR_total += gru_backward(ws.R, ws.gr, dHr_total, params.gru1, grads.gru1);
  }
  for (size_t t = 0; t < example.response.ids.size(); ++t) {
    grads.embeddings.row(example.response.ids[t]) += dR_total.row(static_cast<int>(t));
  }

  return example_loss(example.label, ws.g);
}

double batch_loss(std::span<const LabeledExample> batch, const ModelParams& params) {
  if (batch.empty()) throw std::invalid_argument("batch_loss: empty batch");
  double total = 0.0;
  for (const LabeledExample& ex : batch) {
    total += example_loss(ex.label, forward(ex, params));
  }
  return total;
}

ModelParams batch_gradients(std::span<const LabeledExample> batch, const ModelParams& params,
                            double* loss_out) {
  if (batch.empty()) throw std::invalid_argument("batch_gradients: empty batch");
  ModelParams grads = ModelParams::zeros_like(params);
  double total = 0.0;
  for (const LabeledExample& ex : batch) {
    total += example_loss_and_gradients(ex, params, grads);
  }
  grads.embeddings.row(kPadId).setZero();
  if (!params.config.train_embeddings) grads.embeddings.setZero();
  if (loss_out) *loss_out = total;
  return grads;
}

}  // namespace smn
