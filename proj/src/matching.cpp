#include "smn/matching.hpp"

#include <stdexcept>

namespace smn {

Matrix word_similarity_matrix(const Matrix& U, const Matrix& R) {
  if (U.cols() != R.cols()) {
    throw std::invalid_argument("word_similarity_matrix: embedding dimension mismatch");
  }
  return U * R.transpose();
}

Matrix segment_similarity_matrix(const Matrix& Hu, const Matrix& Hr, const Matrix& A) {
  if (Hu.cols() != A.rows() || A.cols() != Hr.cols() || A.rows() != A.cols()) {
    throw std::invalid_argument("segment_similarity_matrix: hidden dimension mismatch");
  }
  return Hu * A * Hr.transpose();
}

std::vector<Matrix> conv2d(const std::vector<Matrix>& channels, const ConvParams& params) {
  if (channels.empty()) throw std::invalid_argument("conv2d: no input channels");
  if (static_cast<int>(channels.size()) != params.channels()) {
    throw std::invalid_argument("conv2d: channel count mismatch");
  }
  const int H = static_cast<int>(channels[0].rows());
  const int W = static_cast<int>(channels[0].cols());
  const int wh = params.window_h();
  const int ww = params.window_w();
  if (H < wh || W < ww) throw std::invalid_argument("conv2d: input smaller than window");

  const int out_h = H - wh + 1;
  const int out_w = W - ww + 1;
  std::vector<Matrix> maps(static_cast<size_t>(params.feature_maps()));
  for (int f = 0; f < params.feature_maps(); ++f) {
    Matrix pre = Matrix::Constant(out_h, out_w, params.bias(f, 0));
    for (int c = 0; c < params.channels(); ++c) {
      const Matrix& kernel = params.filters[f][c];
      const Matrix& in = channels[static_cast<size_t>(c)];
      for (int i = 0; i < out_h; ++i) {
        for (int j = 0; j < out_w; ++j) {
          pre(i, j) += (kernel.array() * in.block(i, j, wh, ww).array()).sum();
        }
      }
    }
    maps[static_cast<size_t>(f)] = pre.cwiseMax(0.0);
  }
  return maps;
}

std::vector<Matrix> max_pool(const std::vector<Matrix>& maps, int pool_h, int pool_w) {
  if (maps.empty()) throw std::invalid_argument("max_pool: no input maps");
  const int H = static_cast<int>(maps[0].rows());
  const int W = static_cast<int>(maps[0].cols());
  if (H < pool_h || W < pool_w) throw std::invalid_argument("max_pool: map smaller than window");

  const int out_h = H / pool_h;
  const int out_w = W / pool_w;
  std::vector<Matrix> pooled(maps.size());
  for (size_t f = 0; f < maps.size(); ++f) {
    Matrix out(out_h, out_w);
    for (int i = 0; i < out_h; ++i) {
      for (int j = 0; j < out_w; ++j) {
        out(i, j) = maps[f].block(i * pool_h, j * pool_w, pool_h, pool_w).maxCoeff();
      }
    }
    pooled[f] = out;
  }
  return pooled;
}

Vector flatten_maps(const std::vector<Matrix>& maps) {
  const int H = static_cast<int>(maps[0].rows());
  const int W = static_cast<int>(maps[0].cols());
  Vector flat(static_cast<int>(maps.size()) * H * W);
  int k = 0;
  for (const Matrix& map : maps) {
    for (int i = 0; i < H; ++i) {
      for (int j = 0; j < W; ++j) flat(k++) = map(i, j);
    }
  }
  return flat;
}

std::vector<Matrix> conv2d_backward(const std::vector<Matrix>& channels,
                                    const std::vector<Matrix>& outputs,
                                    const std::vector<Matrix>& d_outputs, const ConvParams& params,
                                    ConvParams& grads) {
  const int wh = params.window_h();
  const int ww = params.window_w();
  const int out_h = static_cast<int>(outputs[0].rows());
  const int out_w = static_cast<int>(outputs[0].cols());

  std::vector<Matrix> d_channels(channels.size());
  for (size_t c = 0; c < channels.size(); ++c) {
    d_channels[c] = Matrix::Zero(channels[c].rows(), channels[c].cols());
  }
  for (int f = 0; f < params.feature_maps(); ++f) {
    // ReLU gate: output > 0 iff pre-activation > 0
    const Matrix d_pre =
        (outputs[static_cast<size_t>(f)].array() > 0.0)
            .select(d_outputs[static_cast<size_t>(f)], Matrix::Zero(out_h, out_w));
    grads.bias(f, 0) += d_pre.sum();
    for (int c = 0; c < params.channels(); ++c) {
      const Matrix& in = channels[static_cast<size_t>(c)];
      Matrix& dk = grads.filters[static_cast<size_t>(f)][static_cast<size_t>(c)];
      Matrix& din = d_channels[static_cast<size_t>(c)];
      const Matrix& kernel = params.filters[static_cast<size_t>(f)][static_cast<size_t>(c)];
      for (int i = 0; i < out_h; ++i) {
        for (int j = 0; j < out_w; ++j) {
          const double g = d_pre(i, j);
          if (g == 0.0) continue;
          dk.noalias() += g * in.block(i, j, wh, ww);
          din.block(i, j, wh, ww).noalias() += g * kernel;
        }
      }
    }
  }
  return d_channels;
}

std::vector<Matrix> max_pool_backward(const std::vector<Matrix>& maps,
                                      const std::vector<Matrix>& pooled,
                                      const std::vector<Matrix>& d_pooled, int pool_h,
                                      int pool_w) {
  std::vector<Matrix> d_maps(maps.size());
  for (size_t f = 0; f < maps.size(); ++f) {
    d_maps[f] = Matrix::Zero(maps[f].rows(), maps[f].cols());
    const int out_h = static_cast<int>(pooled[f].rows());
    const int out_w = static_cast<int>(pooled[f].cols());
    for (int i = 0; i < out_h; ++i) {
      for (int j = 0; j < out_w; ++j) {
        // Route to the first window element attaining the max (row-major scan).
        const double target = pooled[f](i, j);
        bool done = false;
        for (int s = 0; s < pool_h && !done; ++s) {
          for (int t = 0; t < pool_w && !done; ++t) {
            if (maps[f](i * pool_h + s, j * pool_w + t) == target) {
              d_maps[f](i * pool_h + s, j * pool_w + t) += d_pooled[f](i, j);
              done = true;
            }
          }
        }
      }
    }
  }
  return d_maps;
}

}  // namespace smn
