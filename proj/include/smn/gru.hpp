#pragma once

#include <random>

#include "smn/types.hpp"

namespace smn {

/// Gate and candidate weights of one GRU. No bias terms.
struct GruParams {
  Matrix Wz, Wr, Wh;  // m x d_in
  Matrix Uz, Ur, Uh;  // m x m

  int input_dim() const { return static_cast<int>(Wz.cols()); }
  int hidden_dim() const { return static_cast<int>(Wz.rows()); }

  static GruParams zeros(int d_in, int m);
  // Input matrices uniform(-s, s) with s = sqrt(6 / (d_in + m)); recurrent
  // matrices orthogonal (QR of a Gaussian matrix).
  static GruParams init(int d_in, int m, std::mt19937_64& rng);
};

// z = sigmoid(Wz x + Uz h), r = sigmoid(Wr x + Ur h),
// c = tanh(Wh x + Uh (r .* h)), h' = z .* c + (1 - z) .* h.
Vector gru_cell(const Vector& x, const Vector& h_prev, const GruParams& params);

/// Per-step activations kept for backpropagation and gate inspection.
struct GruTrace {
  Matrix z, r, c, h;  // T x m, one row per step
};

// Runs gru_cell over every row of inputs (T x d_in) from a zero initial
// state. PAD rows are processed like any other step. Returns the T x m
// state sequence.
Matrix gru_encode(const Matrix& inputs, const GruParams& params, GruTrace* trace = nullptr);

// Backpropagates d_states (T x m, gradient on every hidden state) through a
// recorded run. Accumulates parameter gradients into grads and returns the
// T x d_in input gradients.
Matrix gru_backward(const Matrix& inputs, const GruTrace& trace, const Matrix& d_states,
                    const GruParams& params, GruParams& grads);

}  // namespace smn
