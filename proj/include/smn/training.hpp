#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "smn/forward.hpp"
#include "smn/params.hpp"

namespace smn {

struct TrainConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 200;
  int max_epochs = 10;
  int patience = 2;       // consecutive non-improving evaluations
  int eval_every = 0;     // optimizer steps between evaluations; 0 = once per epoch
  uint64_t seed = 42;

  void validate() const;
};

struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double example_loss(int label, double g);

/// Sum (not mean) of per-example cross entropies, g clamped to
/// [1e-12, 1 - 1e-12] before the logarithms.
double batch_loss(std::span<const LabeledExample> batch, const ModelParams& params);

// Accumulates exact gradients of example_loss into grads and returns the
// example's loss.
double example_loss_and_gradients(const LabeledExample& example, const ModelParams& params,
                                  ModelParams& grads);

/// Exact gradient of batch_loss. The PAD embedding row is forced to zero,
/// and the whole embedding gradient is zeroed when embeddings are frozen.
ModelParams batch_gradients(std::span<const LabeledExample> batch, const ModelParams& params,
                            double* loss_out = nullptr);

struct AdamState {
  std::vector<Matrix> m, v;  // aligned with ModelParams::tensors()
  int64_t t = 0;

  static AdamState init(const ModelParams& params);
};

/// Standard bias-corrected Adam update; increments state.t once per call.
void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const TrainConfig& config);

struct EvalRecord {
  int64_t step = 0;
  double train_loss = 0.0;  // mean per-example loss since the last evaluation
  double val_loss = 0.0;    // mean per-example validation loss
  double wall_ms = 0.0;
};

struct TrainHistory {
  std::vector<EvalRecord> evals;
  int best_eval = -1;
  double best_val_loss = 0.0;
  int64_t steps = 0;
};

/// Tracks the best validation loss; stop after `patience` consecutive
/// non-improving observations.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}
  bool observe(double val_loss);  // true when training should stop
  int best_index() const { return best_index_; }
  double best() const { return best_; }

 private:
  int patience_;
  int seen_ = 0;
  int since_best_ = 0;
  int best_index_ = -1;
  double best_ = 0.0;
};

// Renders one training-log line; the timing field is last so determinism
// checks can strip it.
std::string format_eval_record(const EvalRecord& rec);

// Shuffled mini-batch epochs with periodic validation; keeps and returns the
// best-validation parameters. Throws TrainingDiverged on non-finite loss.
ModelParams train(const std::vector<LabeledExample>& train_set,
                  const std::vector<LabeledExample>& val_set, ModelParams initial,
                  const TrainConfig& config, TrainHistory* history = nullptr,
                  std::ostream* log = nullptr);

struct GradCheckEntry {
  std::string tensor;
  int64_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  GradCheckEntry worst;
  int64_t checked = 0;
};

// Central finite differences on `sample` seeded random scalars plus every
// entry of b2 (and b1 under the dynamic readout). Relative error falls back
// to the absolute difference when both values are below 1e-8 or when they
// agree within the finite-difference noise floor (1e-10).
// analytic_override substitutes the gradients under test (harness self-test).
GradCheckReport grad_check(const ModelParams& params, const LabeledExample& example,
                           double step = 1e-4, int sample = 32, uint64_t seed = 1234,
                           const ModelParams* analytic_override = nullptr);

}  // namespace smn
