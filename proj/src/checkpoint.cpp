#include "smn/checkpoint.hpp"

#include <cstdint>
#include <fstream>

namespace smn {

namespace {

constexpr char kMagic[4] = {'S', 'M', 'N', '1'};
constexpr uint32_t kVersion = 1;

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(buf), 4);
}

void write_i32(std::ostream& out, int32_t v) { write_u32(out, static_cast<uint32_t>(v)); }

uint32_t read_u32(std::istream& in) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (!in) throw CheckpointError("checkpoint truncated");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[i]) << (8 * i);
  return v;
}

int32_t read_i32(std::istream& in) { return static_cast<int32_t>(read_u32(in)); }

void write_matrix(std::ostream& out, const Matrix& m) {
  write_u32(out, static_cast<uint32_t>(m.rows()));
  write_u32(out, static_cast<uint32_t>(m.cols()));
  out.write(reinterpret_cast<const char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void read_matrix(std::istream& in, Matrix& m, const std::string& name) {
  const uint32_t rows = read_u32(in);
  const uint32_t cols = read_u32(in);
  if (rows != static_cast<uint32_t>(m.rows()) || cols != static_cast<uint32_t>(m.cols())) {
    throw CheckpointError("tensor " + name + " has shape " + std::to_string(rows) + "x" +
                          std::to_string(cols) + ", expected " + std::to_string(m.rows()) + "x" +
                          std::to_string(m.cols()));
  }
  in.read(reinterpret_cast<char*>(m.data()),
          static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!in) throw CheckpointError("checkpoint truncated while reading " + name);
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelParams& params,
                     const Vocabulary& vocab) {
  if (vocab.size() != params.vocab_size()) {
    throw CheckpointError("vocabulary size does not match the embedding table");
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open checkpoint for writing: " + path);

  const ModelConfig& cfg = params.config;
  out.write(kMagic, 4);
  write_u32(out, kVersion);
  write_i32(out, cfg.d);
  write_i32(out, cfg.m);
  write_i32(out, cfg.q);
  write_i32(out, cfg.max_len);
  write_i32(out, cfg.max_turns);
  write_i32(out, cfg.window_h);
  write_i32(out, cfg.window_w);
  write_i32(out, cfg.pool_h);
  write_i32(out, cfg.pool_w);
  write_i32(out, cfg.feature_maps);
  write_u32(out, (cfg.use_m1 ? 1u : 0u) | (cfg.use_m2 ? 2u : 0u));
  write_u32(out, static_cast<uint32_t>(cfg.readout));
  write_u32(out, cfg.mask_attention_pads ? 1u : 0u);
  write_u32(out, cfg.train_embeddings ? 1u : 0u);
  write_i32(out, vocab.size());

  for (const std::string& token : vocab.tokens()) {
    write_u32(out, static_cast<uint32_t>(token.size()));
    out.write(token.data(), static_cast<std::streamsize>(token.size()));
  }
  for (const auto& [name, tensor] : params.tensors()) {
    (void)name;
    write_matrix(out, *tensor);
  }
  if (!out) throw CheckpointError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != std::string(kMagic, 4)) {
    throw CheckpointError("bad magic; not an SMN checkpoint: " + path);
  }
  const uint32_t version = read_u32(in);
  if (version != kVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }

  ModelConfig cfg;
  cfg.d = read_i32(in);
  cfg.m = read_i32(in);
  cfg.q = read_i32(in);
  cfg.max_len = read_i32(in);
  cfg.max_turns = read_i32(in);
  cfg.window_h = read_i32(in);
  cfg.window_w = read_i32(in);
  cfg.pool_h = read_i32(in);
  cfg.pool_w = read_i32(in);
  cfg.feature_maps = read_i32(in);
  const uint32_t channels = read_u32(in);
  cfg.use_m1 = (channels & 1u) != 0;
  cfg.use_m2 = (channels & 2u) != 0;
  const uint32_t readout_tag = read_u32(in);
  if (readout_tag > 2) throw CheckpointError("bad readout tag");
  cfg.readout = static_cast<ReadoutKind>(readout_tag);
  cfg.mask_attention_pads = read_u32(in) != 0;
  cfg.train_embeddings = read_u32(in) != 0;
  const int vocab_size = read_i32(in);
  if (vocab_size < 2) throw CheckpointError("bad vocabulary size");

  std::vector<std::string> tokens(static_cast<size_t>(vocab_size));
  for (auto& token : tokens) {
    const uint32_t len = read_u32(in);
    token.resize(len);
    in.read(token.data(), static_cast<std::streamsize>(len));
    if (!in) throw CheckpointError("checkpoint truncated in vocabulary block");
  }

  Checkpoint ckpt{ModelParams::allocate(cfg, vocab_size), Vocabulary::from_tokens(std::move(tokens))};
  for (auto& [name, tensor] : ckpt.params.tensors()) {
    read_matrix(in, *tensor, name);
  }
  return ckpt;
}

}  // namespace smn
