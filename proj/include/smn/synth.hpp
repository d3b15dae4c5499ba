#pragma once

#include <cstdint>
#include <string>

namespace smn {

// Synthetic response-selection corpus. Every context plants a topic token in
// its FIRST utterance; all later turns (including the final message) are
// filler-only. The positive response repeats the planted topic, negatives
// carry other topics, so selecting correctly requires reading early context.
struct SynthConfig {
  int topics = 25;
  int fillers = 25;
  int turns = 5;
  int train_contexts = 500;  // two training lines each (1:1)
  int val_contexts = 50;     // 1 positive + test_negatives lines each
  int test_groups = 100;     // grouped eval lines, 1 positive per group
  int test_negatives = 9;
  int min_words = 3;
  int max_words = 6;
  uint64_t seed = 7;

  void validate() const;
};

struct SynthResult {
  int train_lines = 0;
  int val_lines = 0;
  int test_lines = 0;
  bool self_check_ok = false;
  int groups_checked = 0;
};

// Writes the three files and re-reads the test file to verify the planted
// keyword property group by group.
SynthResult write_synthetic_corpus(const SynthConfig& config, const std::string& train_path,
                                   const std::string& val_path, const std::string& test_path);

}  // namespace smn
