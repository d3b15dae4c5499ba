#include "smn/params.hpp"

#include <cmath>
#include <stdexcept>

namespace smn {

std::string readout_name(ReadoutKind kind) {
  switch (kind) {
    case ReadoutKind::Last: return "last";
    case ReadoutKind::Static: return "static";
    case ReadoutKind::Dynamic: return "dynamic";
  }
  throw std::logic_error("unknown readout kind");
}

ReadoutKind readout_from_name(const std::string& name) {
  if (name == "last") return ReadoutKind::Last;
  if (name == "static") return ReadoutKind::Static;
  if (name == "dynamic") return ReadoutKind::Dynamic;
  throw std::invalid_argument("unknown readout variant: " + name);
}

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(d, "d");
  positive(m, "m");
  positive(q, "q");
  positive(max_len, "max_len");
  positive(max_turns, "max_turns");
  positive(window_h, "window");
  positive(window_w, "window");
  positive(pool_h, "pool");
  positive(pool_w, "pool");
  positive(feature_maps, "feature_maps");
  if (!use_m1 && !use_m2) throw std::invalid_argument("at least one channel must be enabled");
  if (max_len < window_h || max_len < window_w) {
    throw std::invalid_argument("max_len smaller than convolution window");
  }
  if (pooled_h() < 1 || pooled_w() < 1) {
    throw std::invalid_argument("pool window larger than convolution output");
  }
}

namespace {

Matrix xavier(int rows, int cols, int fan_in, int fan_out, std::mt19937_64& rng) {
  const double s = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-s, s);
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) out(i, j) = dist(rng);
  }
  return out;
}

Matrix small_uniform(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  Matrix out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) out(i, j) = dist(rng);
  }
  return out;
}

}  // namespace

ModelParams ModelParams::init(const ModelConfig& config, const Matrix& embedding_matrix,
                              std::mt19937_64& rng) {
  config.validate();
  if (embedding_matrix.cols() != config.d) {
    throw std::invalid_argument("embedding matrix dimension does not match config.d");
  }

  ModelParams p;
  p.config = config;
  p.embeddings = embedding_matrix;
  p.gru1 = GruParams::init(config.d, config.m, rng);
  // Identity start: the segment channel begins as a plain inner product.
  p.A = Matrix::Identity(config.m, config.m);

  const int C = config.channel_count();
  const int win = config.window_h * config.window_w;
  p.conv.filters.resize(static_cast<size_t>(config.feature_maps));
  for (int f = 0; f < config.feature_maps; ++f) {
    p.conv.filters[static_cast<size_t>(f)].resize(static_cast<size_t>(C));
    for (int c = 0; c < C; ++c) {
      p.conv.filters[static_cast<size_t>(f)][static_cast<size_t>(c)] =
          xavier(config.window_h, config.window_w, C * win, config.feature_maps * win, rng);
    }
  }
  // A small random bias keeps conv pre-activations off the exact ReLU kink
  // that all-PAD similarity regions would otherwise sit on.
  p.conv.bias = small_uniform(config.feature_maps, 1, rng);
  p.conv.projection =
      xavier(config.flatten_size(), config.q, config.flatten_size(), config.q, rng);
  p.gru2 = GruParams::init(config.q, config.q, rng);

  switch (config.readout) {
    case ReadoutKind::Last:
      break;
    case ReadoutKind::Static:
      p.readout.w = Matrix::Constant(config.max_turns, 1, 1.0 / config.max_turns);
      break;
    case ReadoutKind::Dynamic:
      p.readout.W11 = xavier(config.q, config.m, config.m, config.q, rng);
      p.readout.W12 = xavier(config.q, config.q, config.q, config.q, rng);
      p.readout.b1 = Matrix::Zero(config.q, 1);
      p.readout.ts = small_uniform(config.q, 1, rng);
      break;
  }
  p.W2 = xavier(2, config.q, config.q, 2, rng);
  p.b2 = Matrix::Zero(2, 1);
  return p;
}

ModelParams ModelParams::allocate(const ModelConfig& config, int vocab_size) {
  config.validate();
  ModelParams p;
  p.config = config;
  p.embeddings = Matrix::Zero(vocab_size, config.d);
  p.gru1 = GruParams::zeros(config.d, config.m);
  p.A = Matrix::Zero(config.m, config.m);
  const int C = config.channel_count();
  p.conv.filters.assign(static_cast<size_t>(config.feature_maps),
                        std::vector<Matrix>(static_cast<size_t>(C),
                                            Matrix::Zero(config.window_h, config.window_w)));
  p.conv.bias = Matrix::Zero(config.feature_maps, 1);
  p.conv.projection = Matrix::Zero(config.flatten_size(), config.q);
  p.gru2 = GruParams::zeros(config.q, config.q);
  switch (config.readout) {
    case ReadoutKind::Last:
      break;
    case ReadoutKind::Static:
      p.readout.w = Matrix::Zero(config.max_turns, 1);
      break;
    case ReadoutKind::Dynamic:
      p.readout.W11 = Matrix::Zero(config.q, config.m);
      p.readout.W12 = Matrix::Zero(config.q, config.q);
      p.readout.b1 = Matrix::Zero(config.q, 1);
      p.readout.ts = Matrix::Zero(config.q, 1);
      break;
  }
  p.W2 = Matrix::Zero(2, config.q);
  p.b2 = Matrix::Zero(2, 1);
  return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
  ModelParams z = other;
  for (auto& [name, tensor] : z.tensors()) {
    (void)name;
    tensor->setZero();
  }
  return z;
}

std::vector<std::pair<std::string, Matrix*>> ModelParams::tensors() {
  std::vector<std::pair<std::string, Matrix*>> out;
  out.emplace_back("embeddings", &embeddings);
  out.emplace_back("gru1.Wz", &gru1.Wz);
  out.emplace_back("gru1.Wr", &gru1.Wr);
  out.emplace_back("gru1.Wh", &gru1.Wh);
  out.emplace_back("gru1.Uz", &gru1.Uz);
  out.emplace_back("gru1.Ur", &gru1.Ur);
  out.emplace_back("gru1.Uh", &gru1.Uh);
  out.emplace_back("A", &A);
  for (size_t f = 0; f < conv.filters.size(); ++f) {
    for (size_t c = 0; c < conv.filters[f].size(); ++c) {
      out.emplace_back("conv.filter." + std::to_string(f) + "." + std::to_string(c),
                       &conv.filters[f][c]);
    }
  }
  out.emplace_back("conv.bias", &conv.bias);
  out.emplace_back("conv.projection", &conv.projection);
  out.emplace_back("gru2.Wz", &gru2.Wz);
  out.emplace_back("gru2.Wr", &gru2.Wr);
  out.emplace_back("gru2.Wh", &gru2.Wh);
  out.emplace_back("gru2.Uz", &gru2.Uz);
  out.emplace_back("gru2.Ur", &gru2.Ur);
  out.emplace_back("gru2.Uh", &gru2.Uh);
  switch (config.readout) {
    case ReadoutKind::Last:
      break;
    case ReadoutKind::Static:
      out.emplace_back("readout.w", &readout.w);
      break;
    case ReadoutKind::Dynamic:
      out.emplace_back("readout.W11", &readout.W11);
      out.emplace_back("readout.W12", &readout.W12);
      out.emplace_back("readout.b1", &readout.b1);
      out.emplace_back("readout.ts", &readout.ts);
      break;
  }
  out.emplace_back("output.W2", &W2);
  out.emplace_back("output.b2", &b2);
  return out;
}

std::vector<std::pair<std::string, const Matrix*>> ModelParams::tensors() const {
  auto mutable_list = const_cast<ModelParams*>(this)->tensors();
  std::vector<std::pair<std::string, const Matrix*>> out;
  out.reserve(mutable_list.size());
  for (auto& [name, tensor] : mutable_list) out.emplace_back(name, tensor);
  return out;
}

int64_t ModelParams::scalar_count() const {
  int64_t n = 0;
  for (const auto& [name, tensor] : tensors()) {
    (void)name;
    n += tensor->size();
  }
  return n;
}

}  // namespace smn
