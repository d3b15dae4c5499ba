#include "smn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

namespace smn {

void TrainConfig::validate() const {
  auto in_unit = [](double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) {
      throw std::invalid_argument(std::string(name) + " must lie in (0, 1)");
    }
  };
  in_unit(beta1, "beta1");
  in_unit(beta2, "beta2");
  if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
  if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (eval_every < 0) throw std::invalid_argument("eval_every must be >= 0");
}

AdamState AdamState::init(const ModelParams& params) {
  AdamState state;
  for (const auto& [name, tensor] : params.tensors()) {
    (void)name;
    state.m.emplace_back(Matrix::Zero(tensor->rows(), tensor->cols()));
    state.v.emplace_back(Matrix::Zero(tensor->rows(), tensor->cols()));
  }
  return state;
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const TrainConfig& config) {
  auto param_list = params.tensors();
  auto grad_list = grads.tensors();
  if (param_list.size() != grad_list.size() || param_list.size() != state.m.size()) {
    throw std::invalid_argument("adam_step: parameter/gradient/state misalignment");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < param_list.size(); ++i) {
    const Matrix& g = *grad_list[i].second;
    Matrix& m = state.m[i];
    Matrix& v = state.v[i];
    m = config.beta1 * m + (1.0 - config.beta1) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    const Matrix m_hat = m / bc1;
    const Matrix v_hat = v / bc2;
    param_list[i].second->array() -=
        config.learning_rate * m_hat.array() / (v_hat.array().sqrt() + config.epsilon);
  }
}

bool EarlyStopper::observe(double val_loss) {
  if (best_index_ < 0 || val_loss < best_) {
    best_ = val_loss;
    best_index_ = seen_;
    since_best_ = 0;
  } else {
    ++since_best_;
  }
  ++seen_;
  return since_best_ >= patience_;
}

std::string format_eval_record(const EvalRecord& rec) {
  std::ostringstream os;
  os.precision(17);
  os << "step=" << rec.step << " train_loss=" << rec.train_loss << " val_loss=" << rec.val_loss
     << " wall_ms=" << rec.wall_ms;
  return os.str();
}

namespace {

double mean_dataset_loss(const std::vector<LabeledExample>& data, const ModelParams& params) {
  if (data.empty()) return 0.0;
  double total = 0.0;
  for (const LabeledExample& ex : data) {
    total += example_loss(ex.label, forward(ex, params));
  }
  return total / static_cast<double>(data.size());
}

}  // namespace

ModelParams train(const std::vector<LabeledExample>& train_set,
                  const std::vector<LabeledExample>& val_set, ModelParams initial,
                  const TrainConfig& config, TrainHistory* history, std::ostream* log) {
  config.validate();
  if (train_set.empty()) throw std::invalid_argument("train: empty training set");

  const auto start = std::chrono::steady_clock::now();
  auto wall_ms = [&start]() {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
  };

  ModelParams theta = std::move(initial);
  ModelParams best = theta;
  AdamState state = AdamState::init(theta);
  EarlyStopper stopper(config.patience);
  TrainHistory hist;

  const int64_t steps_per_epoch =
      (static_cast<int64_t>(train_set.size()) + config.batch_size - 1) / config.batch_size;
  const int64_t eval_every = config.eval_every > 0 ? config.eval_every : steps_per_epoch;

  std::mt19937_64 rng(config.seed);
  std::vector<size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), size_t{0});

  std::vector<LabeledExample> batch;
  double loss_since_eval = 0.0;
  int64_t examples_since_eval = 0;
  int64_t step = 0;
  bool stop = false;

  auto run_eval = [&]() {
    const double val_loss = mean_dataset_loss(val_set.empty() ? train_set : val_set, theta);
    if (!std::isfinite(val_loss)) {
      throw TrainingDiverged("non-finite validation loss at step " + std::to_string(step));
    }
    EvalRecord rec;
    rec.step = step;
    rec.train_loss =
        examples_since_eval > 0 ? loss_since_eval / static_cast<double>(examples_since_eval) : 0.0;
    rec.val_loss = val_loss;
    rec.wall_ms = wall_ms();
    hist.evals.push_back(rec);
    if (log) *log << format_eval_record(rec) << "\n";
    loss_since_eval = 0.0;
    examples_since_eval = 0;

    const bool improved = hist.best_eval < 0 || val_loss < hist.best_val_loss;
    if (improved) {
      hist.best_val_loss = val_loss;
      hist.best_eval = static_cast<int>(hist.evals.size()) - 1;
      best = theta;
    }
    if (stopper.observe(val_loss)) stop = true;
  };

  for (int epoch = 0; epoch < config.max_epochs && !stop; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t offset = 0; offset < order.size() && !stop; offset += config.batch_size) {
      const size_t end = std::min(order.size(), offset + config.batch_size);
      batch.clear();
      for (size_t i = offset; i < end; ++i) batch.push_back(train_set[order[i]]);

      double loss = 0.0;
      const ModelParams grads = batch_gradients(batch, theta, &loss);
      if (!std::isfinite(loss)) {
        throw TrainingDiverged("non-finite training loss at step " + std::to_string(step));
      }
      adam_step(theta, grads, state, config);
      ++step;
      loss_since_eval += loss;
      examples_since_eval += static_cast<int64_t>(batch.size());

      if (step % eval_every == 0) run_eval();
    }
  }
  // Trailing partial interval still deserves one evaluation.
  if (!stop && examples_since_eval > 0) run_eval();

  hist.steps = step;
  if (history) *history = std::move(hist);
  return best;
}

GradCheckReport grad_check(const ModelParams& params, const LabeledExample& example, double step,
                           int sample, uint64_t seed, const ModelParams* analytic_override) {
  ModelParams analytic = ModelParams::zeros_like(params);
  if (analytic_override) {
    analytic = *analytic_override;
  } else {
    example_loss_and_gradients(example, params, analytic);
  }
  analytic.embeddings.row(kPadId).setZero();
  if (!params.config.train_embeddings) analytic.embeddings.setZero();

  ModelParams probe = params;
  auto probe_list = probe.tensors();
  auto grad_list = analytic.tensors();

  // Sampling universe: every free scalar. The PAD embedding row is pinned to
  // zero (and the whole table when frozen), so those entries are excluded.
  std::vector<std::pair<size_t, int64_t>> chosen;
  const LabeledExample single[] = {example};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick_tensor(0, probe_list.size() - 1);
  int accepted = 0;
  while (accepted < sample) {
    const size_t ti = pick_tensor(rng);
    std::uniform_int_distribution<int64_t> pick_index(0, probe_list[ti].second->size() - 1);
    const int64_t idx = pick_index(rng);
    if (probe_list[ti].first == "embeddings") {
      if (!params.config.train_embeddings) continue;
      // Column-major flat index: row = idx % V.
      if (idx % probe_list[ti].second->rows() == kPadId) continue;
    }
    chosen.emplace_back(ti, idx);
    ++accepted;
  }
  for (size_t ti = 0; ti < probe_list.size(); ++ti) {
    const std::string& name = probe_list[ti].first;
    if (name == "output.b2" || name == "readout.b1") {
      for (int64_t idx = 0; idx < probe_list[ti].second->size(); ++idx) {
        chosen.emplace_back(ti, idx);
      }
    }
  }

  GradCheckReport report;
  for (const auto& [ti, idx] : chosen) {
    double* cell = probe_list[ti].second->data() + idx;
    const double saved = *cell;
    *cell = saved + step;
    const double plus = batch_loss(single, probe);
    *cell = saved - step;
    const double minus = batch_loss(single, probe);
    *cell = saved;

    const double numeric = (plus - minus) / (2.0 * step);
    const double a = grad_list[ti].second->data()[idx];
    const double scale = std::max(std::abs(a), std::abs(numeric));
    const double diff = std::abs(a - numeric);
    // Central differences of an O(1) loss bottom out near 1e-12; below that
    // (and in the 0/0 regime) the absolute difference is the honest error.
    const double rel = (scale < 1e-8 || diff < 1e-10) ? diff : diff / scale;
    ++report.checked;
    if (rel > report.max_rel_error || report.checked == 1) {
      report.max_rel_error = rel;
      report.worst = {probe_list[ti].first, idx, a, numeric, rel};
    }
  }
  return report;
}

}  // namespace smn
