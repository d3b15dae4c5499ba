#pragma once

#include <vector>

#include "smn/types.hpp"

namespace smn {

/// Word-level channel: entry (i, j) = dot(u_i, r_j) of the word embeddings.
/// U is n_u x d, R is n_r x d (one row per position).
Matrix word_similarity_matrix(const Matrix& U, const Matrix& R);

/// Segment-level channel: entry (i, j) = h_u_i' * A * h_r_j over GRU states.
Matrix segment_similarity_matrix(const Matrix& Hu, const Matrix& Hr, const Matrix& A);

struct ConvParams {
  // filters[f][c]: window_h x window_w kernel of feature map f, channel c
  std::vector<std::vector<Matrix>> filters;
  Matrix bias;        // feature_maps x 1
  Matrix projection;  // flatten_size x q

  int feature_maps() const { return static_cast<int>(filters.size()); }
  int channels() const { return filters.empty() ? 0 : static_cast<int>(filters[0].size()); }
  int window_h() const { return filters.empty() ? 0 : static_cast<int>(filters[0][0].rows()); }
  int window_w() const { return filters.empty() ? 0 : static_cast<int>(filters[0][0].cols()); }
};

// VALID cross-correlation summing over input channels, ReLU applied.
// H x W input gives (H - wh + 1) x (W - ww + 1) maps.
std::vector<Matrix> conv2d(const std::vector<Matrix>& channels, const ConvParams& params);

// Non-overlapping pool windows with stride == pool size; ragged remainder
// rows/columns are dropped.
std::vector<Matrix> max_pool(const std::vector<Matrix>& maps, int pool_h, int pool_w);

/// Row-major flatten with the map index outermost.
Vector flatten_maps(const std::vector<Matrix>& maps);

// Backward counterparts used by the training module.
std::vector<Matrix> conv2d_backward(const std::vector<Matrix>& channels,
                                    const std::vector<Matrix>& outputs,
                                    const std::vector<Matrix>& d_outputs, const ConvParams& params,
                                    ConvParams& grads);
std::vector<Matrix> max_pool_backward(const std::vector<Matrix>& maps,
                                      const std::vector<Matrix>& pooled,
                                      const std::vector<Matrix>& d_pooled, int pool_h, int pool_w);

}  // namespace smn
