#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "smn/forward.hpp"
#include "smn/text.hpp"

namespace smn {

struct Candidate {
  double score = 0.0;
  int label = 0;
  int input_position = 0;
};

struct RankedGroup {
  std::string group_id;
  std::vector<Candidate> candidates;
};

/// Candidate indices sorted by score descending, ties by input position.
std::vector<int> rank_candidates(const RankedGroup& group);

// Mean over groups of |positives in top k| / |positives in group|. Every
// group must hold exactly n candidates.
double recall_at_k(const std::vector<RankedGroup>& groups, int n, int k);

double mean_reciprocal_rank(const std::vector<RankedGroup>& groups);
double mean_average_precision(const std::vector<RankedGroup>& groups);
double precision_at_1(const std::vector<RankedGroup>& groups);

/// Drops all-positive and all-negative groups.
std::pair<std::vector<RankedGroup>, int> filter_degenerate(std::vector<RankedGroup> groups);

struct MetricReport {
  std::optional<double> map, mrr, p_at_1;
  std::map<std::pair<int, int>, double> recall_at;  // (n, k) -> value
  int groups_evaluated = 0;
  int groups_filtered = 0;
};

// Filters degenerate groups and computes every applicable metric. R_n@k is
// reported only when all groups share one size; R_2@1 is derived from
// (positive, first negative) sub-pairs and omitted if any group has more
// than one positive.
MetricReport compute_metrics(std::vector<RankedGroup> groups);

struct EvaluateOptions {
  ShapeConfig shape;  // must match the model config
};

/// Scores an eval file with the model and reduces it to a MetricReport.
MetricReport evaluate(const ModelParams& params, const Vocabulary& vocab,
                      const std::string& eval_path);

/// Groups pre-scored eval examples by group id (first-appearance order).
std::vector<RankedGroup> group_scored_examples(const std::vector<EvalExample>& examples,
                                               const std::vector<double>& scores);

std::string report_table(const MetricReport& report);
// `which` empty = all metrics; names: map, mrr, p@1, r{n}@{k}.
std::string report_json(const MetricReport& report, const std::vector<std::string>& which = {});

}  // namespace smn
