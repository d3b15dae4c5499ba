#pragma once

#include <string>

#include "smn/params.hpp"
#include "smn/text.hpp"

namespace smn {

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  ModelParams params;
  Vocabulary vocab;
};

// Single-file binary format, little-endian throughout:
//   magic "SMN1", u32 version,
//   hyperparameter header (dims, window/pool, maps, channels, readout tag,
//   flags, vocab size),
//   vocabulary block (length-prefixed tokens, ids implicit),
//   parameter payload: tensors in canonical order, each as u32 rows,
//   u32 cols, then rows*cols float64 coefficients (column-major).
void save_checkpoint(const std::string& path, const ModelParams& params,
                     const Vocabulary& vocab);

Checkpoint load_checkpoint(const std::string& path);

}  // namespace smn
