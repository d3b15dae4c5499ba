#include "smn/gru.hpp"

#include <cmath>
#include <stdexcept>

namespace smn {

namespace {

Matrix uniform_matrix(int rows, int cols, double s, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-s, s);
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) out(i, j) = dist(rng);
  }
  return out;
}

Matrix orthogonal_matrix(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = gauss(rng);
  }
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix Q = qr.householderQ();
  // Fix the sign convention so a given Gaussian draw always yields one Q.
  Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    if (R(j, j) < 0) Q.col(j) = -Q.col(j);
  }
  return Q;
}

Vector sigmoid(const Vector& x) {
  return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

void check_cell_shapes(const Vector& x, const Vector& h_prev, const GruParams& p) {
  if (x.size() != p.input_dim() || h_prev.size() != p.hidden_dim() ||
      p.Uz.rows() != p.hidden_dim() || p.Uz.cols() != p.hidden_dim()) {
    throw std::invalid_argument("gru_cell: shape mismatch");
  }
}

}  // namespace

GruParams GruParams::zeros(int d_in, int m) {
  GruParams p;
  p.Wz = Matrix::Zero(m, d_in);
  p.Wr = Matrix::Zero(m, d_in);
  p.Wh = Matrix::Zero(m, d_in);
  p.Uz = Matrix::Zero(m, m);
  p.Ur = Matrix::Zero(m, m);
  p.Uh = Matrix::Zero(m, m);
  return p;
}

GruParams GruParams::init(int d_in, int m, std::mt19937_64& rng) {
  const double s = std::sqrt(6.0 / (d_in + m));
  GruParams p;
  p.Wz = uniform_matrix(m, d_in, s, rng);
  p.Wr = uniform_matrix(m, d_in, s, rng);
  p.Wh = uniform_matrix(m, d_in, s, rng);
  p.Uz = orthogonal_matrix(m, rng);
  p.Ur = orthogonal_matrix(m, rng);
  p.Uh = orthogonal_matrix(m, rng);
  return p;
}

Vector gru_cell(const Vector& x, const Vector& h_prev, const GruParams& params) {
  check_cell_shapes(x, h_prev, params);
  const Vector z = sigmoid(params.Wz * x + params.Uz * h_prev);
  const Vector r = sigmoid(params.Wr * x + params.Ur * h_prev);
  const Vector c = ((params.Wh * x + params.Uh * (r.array() * h_prev.array()).matrix()).array())
                       .tanh()
                       .matrix();
  return (z.array() * c.array() + (1.0 - z.array()) * h_prev.array()).matrix();
}

Matrix gru_encode(const Matrix& inputs, const GruParams& params, GruTrace* trace) {
  const int T = static_cast<int>(inputs.rows());
  const int m = params.hidden_dim();
  if (T < 1) throw std::invalid_argument("gru_encode: empty sequence");
  if (inputs.cols() != params.input_dim()) {
    throw std::invalid_argument("gru_encode: input dimension mismatch");
  }

  Matrix states(T, m);
  if (trace) {
    trace->z.resize(T, m);
    trace->r.resize(T, m);
    trace->c.resize(T, m);
    trace->h.resize(T, m);
  }
  Vector h = Vector::Zero(m);
  for (int t = 0; t < T; ++t) {
    const Vector x = inputs.row(t).transpose();
    const Vector z = sigmoid(params.Wz * x + params.Uz * h);
    const Vector r = sigmoid(params.Wr * x + params.Ur * h);
    const Vector c =
        ((params.Wh * x + params.Uh * (r.array() * h.array()).matrix()).array()).tanh().matrix();
    h = (z.array() * c.array() + (1.0 - z.array()) * h.array()).matrix();
    states.row(t) = h.transpose();
    if (trace) {
      trace->z.row(t) = z.transpose();
      trace->r.row(t) = r.transpose();
      trace->c.row(t) = c.transpose();
      trace->h.row(t) = h.transpose();
    }
  }
  return states;
}

Matrix gru_backward(const Matrix& inputs, const GruTrace& trace, const Matrix& d_states,
                    const GruParams& params, GruParams& grads) {
  const int T = static_cast<int>(inputs.rows());
  const int m = params.hidden_dim();
  if (d_states.rows() != T || d_states.cols() != m) {
    throw std::invalid_argument("gru_backward: d_states shape mismatch");
  }

  Matrix d_inputs = Matrix::Zero(T, params.input_dim());
  Vector dh = Vector::Zero(m);
  for (int t = T - 1; t >= 0; --t) {
    dh += d_states.row(t).transpose();
    const Vector x = inputs.row(t).transpose();
    const Vector z = trace.z.row(t).transpose();
    const Vector r = trace.r.row(t).transpose();
    const Vector c = trace.c.row(t).transpose();
    const Vector h_prev = t > 0 ? Vector(trace.h.row(t - 1).transpose()) : Vector(Vector::Zero(m));

    const Vector dz = (dh.array() * (c - h_prev).array()).matrix();
    const Vector dc = (dh.array() * z.array()).matrix();
    Vector dh_prev = (dh.array() * (1.0 - z.array())).matrix();

    const Vector dac = (dc.array() * (1.0 - c.array().square())).matrix();
    grads.Wh.noalias() += dac * x.transpose();
    grads.Uh.noalias() += dac * (r.array() * h_prev.array()).matrix().transpose();
    const Vector drh = params.Uh.transpose() * dac;
    const Vector dr = (drh.array() * h_prev.array()).matrix();
    dh_prev += (drh.array() * r.array()).matrix();

    const Vector daz = (dz.array() * z.array() * (1.0 - z.array())).matrix();
    const Vector dar = (dr.array() * r.array() * (1.0 - r.array())).matrix();
    grads.Wz.noalias() += daz * x.transpose();
    grads.Uz.noalias() += daz * h_prev.transpose();
    dh_prev += params.Uz.transpose() * daz;
    grads.Wr.noalias() += dar * x.transpose();
    grads.Ur.noalias() += dar * h_prev.transpose();
    dh_prev += params.Ur.transpose() * dar;

    d_inputs.row(t) =
        (params.Wz.transpose() * daz + params.Wr.transpose() * dar + params.Wh.transpose() * dac)
            .transpose();
    dh = dh_prev;
  }
  return d_inputs;
}

}  // namespace smn
