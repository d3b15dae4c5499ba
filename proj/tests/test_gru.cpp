#include <doctest.h>

#include <cmath>
#include <random>

#include "smn/gru.hpp"

using namespace smn;

namespace {

Matrix random_matrix(int rows, int cols, std::mt19937_64& rng, double scale = 0.5) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = dist(rng);
  }
  return m;
}

GruParams random_gru(int d_in, int m, std::mt19937_64& rng) {
  GruParams p = GruParams::zeros(d_in, m);
  p.Wz = random_matrix(m, d_in, rng);
  p.Wr = random_matrix(m, d_in, rng);
  p.Wh = random_matrix(m, d_in, rng);
  p.Uz = random_matrix(m, m, rng);
  p.Ur = random_matrix(m, m, rng);
  p.Uh = random_matrix(m, m, rng);
  return p;
}

GruParams scalar_gru(double w, double u) {
  GruParams p = GruParams::zeros(1, 1);
  p.Wz(0, 0) = p.Wr(0, 0) = p.Wh(0, 0) = w;
  p.Uz(0, 0) = p.Ur(0, 0) = p.Uh(0, 0) = u;
  return p;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Plain scalar re-statement of the cell, used as the unrolled oracle.
double scalar_cell(double x, double h, double w, double u) {
  const double z = sigmoid(w * x + u * h);
  const double r = sigmoid(w * x + u * h);
  const double c = std::tanh(w * x + u * (r * h));
  return z * c + (1.0 - z) * h;
}

}  // namespace

TEST_CASE("gru_cell zero and gate-symmetry cases") {
  const GruParams zeros = GruParams::zeros(1, 1);
  Vector x(1), h(1);
  x << 1.7;
  h << 0.0;
  CHECK(gru_cell(x, h, zeros)(0) == 0.0);

  h << 0.6;
  // z = r = 0.5, candidate tanh(0) = 0 -> h' = 0.5 * 0.6
  CHECK(gru_cell(x, h, zeros)(0) == doctest::Approx(0.3).epsilon(1e-12));
}

TEST_CASE("gru_cell scalar hand-evaluated value") {
  const GruParams p = scalar_gru(1.0, 1.0);
  Vector x(1), h(1);
  x << 1.0;
  h << 0.0;
  // z = r = sigmoid(1) = 0.73106, c = tanh(1) = 0.76159, h' = z*c = 0.55677
  CHECK(gru_cell(x, h, p)(0) == doctest::Approx(0.55677).epsilon(1e-4));
}

TEST_CASE("gru_cell rejects mismatched shapes") {
  const GruParams p = GruParams::zeros(2, 3);
  Vector x(1), h(3);
  x.setZero();
  h.setZero();
  CHECK_THROWS_AS(gru_cell(x, h, p), std::invalid_argument);
}

TEST_CASE("gru_encode single step equals gru_cell") {
  std::mt19937_64 rng(17);
  const GruParams p = random_gru(3, 2, rng);
  const Matrix inputs = random_matrix(1, 3, rng);
  const Matrix states = gru_encode(inputs, p);
  const Vector one = gru_cell(inputs.row(0).transpose(), Vector::Zero(2), p);
  CHECK((states.row(0).transpose() - one).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gru_encode all-zero inputs and params stay at zero") {
  const GruParams p = GruParams::zeros(2, 2);
  const Matrix states = gru_encode(Matrix::Zero(5, 2), p);
  CHECK(states.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gru_encode matches the unrolled scalar oracle") {
  const GruParams p = scalar_gru(0.8, -0.4);
  Matrix inputs(3, 1);
  inputs << 0.5, -1.0, 0.25;
  const Matrix states = gru_encode(inputs, p);
  double h = 0.0;
  for (int t = 0; t < 3; ++t) {
    h = scalar_cell(inputs(t, 0), h, 0.8, -0.4);
    CHECK(states(t, 0) == doctest::Approx(h).epsilon(1e-12));
  }
}

TEST_CASE("gru_encode rejects empty sequences") {
  const GruParams p = GruParams::zeros(2, 2);
  CHECK_THROWS_AS(gru_encode(Matrix::Zero(0, 2), p), std::invalid_argument);
}

TEST_CASE("states stay strictly inside (-1, 1) from a zero start") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    const GruParams p = random_gru(4, 3, rng);
    const Matrix inputs = random_matrix(12, 4, rng, 5.0);
    const Matrix states = gru_encode(inputs, p);
    CHECK(states.cwiseAbs().maxCoeff() < 1.0);
  }
}

TEST_CASE("prefix property: truncated run equals the first states of the full run") {
  std::mt19937_64 rng(29);
  const GruParams p = random_gru(3, 4, rng);
  const Matrix inputs = random_matrix(9, 3, rng);
  const Matrix full = gru_encode(inputs, p);
  for (int t = 1; t < 9; ++t) {
    const Matrix prefix = gru_encode(inputs.topRows(t), p);
    CHECK((prefix - full.topRows(t)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("gru_backward matches central finite differences") {
  std::mt19937_64 rng(31);
  const int T = 5, d_in = 3, m = 4;
  const GruParams p = random_gru(d_in, m, rng);
  const Matrix inputs = random_matrix(T, d_in, rng);
  const Vector weights = random_matrix(m, 1, rng).col(0);

  // Scalar objective: weighted sum of the final state.
  auto objective = [&](const GruParams& params, const Matrix& ins) {
    const Matrix states = gru_encode(ins, params);
    return weights.dot(states.row(T - 1).transpose());
  };

  GruTrace trace;
  gru_encode(inputs, p, &trace);
  GruParams grads = GruParams::zeros(d_in, m);
  Matrix d_states = Matrix::Zero(T, m);
  d_states.row(T - 1) = weights.transpose();
  const Matrix d_inputs = gru_backward(inputs, trace, d_states, p, grads);

  const double h = 1e-5;
  auto check_tensor = [&](const Matrix& grad, Matrix GruParams::* field) {
    GruParams probe = p;
    Matrix& target = probe.*field;
    for (int i = 0; i < target.rows(); ++i) {
      for (int j = 0; j < target.cols(); ++j) {
        const double saved = target(i, j);
        target(i, j) = saved + h;
        const double plus = objective(probe, inputs);
        target(i, j) = saved - h;
        const double minus = objective(probe, inputs);
        target(i, j) = saved;
        const double numeric = (plus - minus) / (2 * h);
        CHECK(grad(i, j) == doctest::Approx(numeric).epsilon(1e-4));
      }
    }
  };
  check_tensor(grads.Wz, &GruParams::Wz);
  check_tensor(grads.Wr, &GruParams::Wr);
  check_tensor(grads.Wh, &GruParams::Wh);
  check_tensor(grads.Uz, &GruParams::Uz);
  check_tensor(grads.Ur, &GruParams::Ur);
  check_tensor(grads.Uh, &GruParams::Uh);

  Matrix probe_inputs = inputs;
  for (int t = 0; t < T; ++t) {
    for (int j = 0; j < d_in; ++j) {
      const double saved = probe_inputs(t, j);
      probe_inputs(t, j) = saved + h;
      const double plus = objective(p, probe_inputs);
      probe_inputs(t, j) = saved - h;
      const double minus = objective(p, probe_inputs);
      probe_inputs(t, j) = saved;
      CHECK(d_inputs(t, j) == doctest::Approx((plus - minus) / (2 * h)).epsilon(1e-4));
    }
  }
}

TEST_CASE("orthogonal recurrent init") {
  std::mt19937_64 rng(37);
  const GruParams p = GruParams::init(5, 6, rng);
  const Matrix should_be_identity = p.Uz.transpose() * p.Uz;
  CHECK((should_be_identity - Matrix::Identity(6, 6)).cwiseAbs().maxCoeff() < 1e-10);
  const double s = std::sqrt(6.0 / (5 + 6));
  CHECK(p.Wh.cwiseAbs().maxCoeff() <= s);
}
