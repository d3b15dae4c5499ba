#include "smn/run_config.hpp"

#include <fstream>

namespace smn {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const int out = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key \"" + key + "\": expected integer, got \"" + v + "\"");
  }
}

double to_double(const std::string& v, const std::string& key) {
  try {
    size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw ConfigError("key \"" + key + "\": expected number, got \"" + v + "\"");
  }
}

bool to_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key \"" + key + "\": expected boolean, got \"" + v + "\"");
}

// "3" or "3x4"
std::pair<int, int> to_dims(const std::string& v, const std::string& key) {
  const size_t x = v.find('x');
  if (x == std::string::npos) {
    const int n = to_int(v, key);
    return {n, n};
  }
  return {to_int(v.substr(0, x), key), to_int(v.substr(x + 1), key)};
}

}  // namespace

void apply_key_value(RunConfig& config, const std::string& key, const std::string& value) {
  if (key == "d") config.model.d = to_int(value, key);
  else if (key == "m") config.model.m = to_int(value, key);
  else if (key == "q") config.model.q = to_int(value, key);
  else if (key == "max_len") config.model.max_len = to_int(value, key);
  else if (key == "max_turns") config.model.max_turns = to_int(value, key);
  else if (key == "window") {
    std::tie(config.model.window_h, config.model.window_w) = to_dims(value, key);
  } else if (key == "pool") {
    std::tie(config.model.pool_h, config.model.pool_w) = to_dims(value, key);
  } else if (key == "feature_maps") {
    config.model.feature_maps = to_int(value, key);
  } else if (key == "channels") {
    if (value == "both") { config.model.use_m1 = true; config.model.use_m2 = true; }
    else if (value == "m1") { config.model.use_m1 = true; config.model.use_m2 = false; }
    else if (value == "m2") { config.model.use_m1 = false; config.model.use_m2 = true; }
    else throw ConfigError("channels must be both, m1 or m2, got \"" + value + "\"");
  } else if (key == "readout") {
    try {
      config.model.readout = readout_from_name(value);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else if (key == "mask_attention_pads") {
    config.model.mask_attention_pads = to_bool(value, key);
  } else if (key == "freeze_embeddings") {
    config.model.train_embeddings = !to_bool(value, key);
  } else if (key == "learning_rate" || key == "lr") {
    config.train.learning_rate = to_double(value, key);
  } else if (key == "beta1") config.train.beta1 = to_double(value, key);
  else if (key == "beta2") config.train.beta2 = to_double(value, key);
  else if (key == "epsilon") config.train.epsilon = to_double(value, key);
  else if (key == "batch_size") config.train.batch_size = to_int(value, key);
  else if (key == "max_epochs") config.train.max_epochs = to_int(value, key);
  else if (key == "patience") config.train.patience = to_int(value, key);
  else if (key == "eval_every") config.train.eval_every = to_int(value, key);
  else if (key == "seed") config.train.seed = static_cast<uint64_t>(std::stoull(value));
  else if (key == "vocab_min_count") config.vocab_min_count = to_int(value, key);
  else if (key == "vocab_max_size") config.vocab_max_size = to_int(value, key);
  else if (key == "train") config.train_path = value;
  else if (key == "val") config.val_path = value;
  else if (key == "test") config.test_path = value;
  else if (key == "embeddings") config.embeddings_path = value;
  else if (key == "index") config.index_path = value;
  else if (key == "checkpoint") config.checkpoint_path = value;
  else if (key == "log") config.log_path = value;
  else throw ConfigError("unknown config key \"" + key + "\"");
}

void apply_config_file(RunConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    apply_key_value(config, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
}

}  // namespace smn
