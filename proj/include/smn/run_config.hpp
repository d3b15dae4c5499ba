#pragma once

#include <string>
#include <vector>

#include "smn/params.hpp"
#include "smn/training.hpp"

namespace smn {

/// Everything a CLI run needs: model shape, optimizer settings, vocabulary
/// limits and file paths. Config file values load first, flags override.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  int vocab_min_count = 1;
  int vocab_max_size = 50000;
  std::string train_path, val_path, test_path;
  std::string embeddings_path;
  std::string index_path;
  std::string checkpoint_path;
  std::string log_path;  // defaults to checkpoint_path + ".log"
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Known keys: d, m, q, max_len, max_turns, window, pool, feature_maps,
// channels (both|m1|m2), readout (last|static|dynamic), mask_attention_pads,
// freeze_embeddings, learning_rate, beta1, beta2, epsilon, batch_size,
// max_epochs, patience, eval_every, seed, vocab_min_count, vocab_max_size,
// train, val, test, embeddings, index, checkpoint, log.
void apply_key_value(RunConfig& config, const std::string& key, const std::string& value);

/// Line-based `key = value` file; blank lines and '#' comments skipped.
void apply_config_file(RunConfig& config, const std::string& path);

}  // namespace smn
