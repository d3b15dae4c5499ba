#include "smn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace smn {

std::vector<int> rank_candidates(const RankedGroup& group) {
  std::vector<int> order(group.candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Candidate& ca = group.candidates[static_cast<size_t>(a)];
    const Candidate& cb = group.candidates[static_cast<size_t>(b)];
    if (ca.score != cb.score) return ca.score > cb.score;
    return ca.input_position < cb.input_position;
  });
  return order;
}

namespace {

int positive_count(const RankedGroup& g) {
  int n = 0;
  for (const Candidate& c : g.candidates) n += c.label == 1 ? 1 : 0;
  return n;
}

}  // namespace

double recall_at_k(const std::vector<RankedGroup>& groups, int n, int k) {
  if (groups.empty()) throw std::invalid_argument("recall_at_k: no groups");
  double total = 0.0;
  for (const RankedGroup& g : groups) {
    if (static_cast<int>(g.candidates.size()) != n) {
      throw std::invalid_argument("recall_at_k: group \"" + g.group_id + "\" has " +
                                  std::to_string(g.candidates.size()) + " candidates, expected " +
                                  std::to_string(n));
    }
    const int positives = positive_count(g);
    const auto order = rank_candidates(g);
    int hits = 0;
    for (int r = 0; r < k && r < n; ++r) {
      hits += g.candidates[static_cast<size_t>(order[static_cast<size_t>(r)])].label == 1 ? 1 : 0;
    }
    total += static_cast<double>(hits) / static_cast<double>(positives);
  }
  return total / static_cast<double>(groups.size());
}

double mean_reciprocal_rank(const std::vector<RankedGroup>& groups) {
  if (groups.empty()) throw std::invalid_argument("mean_reciprocal_rank: no groups");
  double total = 0.0;
  for (const RankedGroup& g : groups) {
    const auto order = rank_candidates(g);
    for (size_t r = 0; r < order.size(); ++r) {
      if (g.candidates[static_cast<size_t>(order[r])].label == 1) {
        total += 1.0 / static_cast<double>(r + 1);
        break;
      }
    }
  }
  return total / static_cast<double>(groups.size());
}

double mean_average_precision(const std::vector<RankedGroup>& groups) {
  if (groups.empty()) throw std::invalid_argument("mean_average_precision: no groups");
  double total = 0.0;
  for (const RankedGroup& g : groups) {
    const auto order = rank_candidates(g);
    int positives_seen = 0;
    double ap = 0.0;
    for (size_t r = 0; r < order.size(); ++r) {
      if (g.candidates[static_cast<size_t>(order[r])].label == 1) {
        ++positives_seen;
        ap += static_cast<double>(positives_seen) / static_cast<double>(r + 1);
      }
    }
    total += ap / static_cast<double>(positives_seen);
  }
  return total / static_cast<double>(groups.size());
}

double precision_at_1(const std::vector<RankedGroup>& groups) {
  if (groups.empty()) throw std::invalid_argument("precision_at_1: no groups");
  double hits = 0.0;
  for (const RankedGroup& g : groups) {
    const auto order = rank_candidates(g);
    hits += g.candidates[static_cast<size_t>(order[0])].label == 1 ? 1.0 : 0.0;
  }
  return hits / static_cast<double>(groups.size());
}

std::pair<std::vector<RankedGroup>, int> filter_degenerate(std::vector<RankedGroup> groups) {
  std::vector<RankedGroup> kept;
  int dropped = 0;
  for (auto& g : groups) {
    const int positives = positive_count(g);
    if (positives == 0 || positives == static_cast<int>(g.candidates.size())) {
      ++dropped;
    } else {
      kept.push_back(std::move(g));
    }
  }
  return {std::move(kept), dropped};
}

MetricReport compute_metrics(std::vector<RankedGroup> groups) {
  MetricReport report;
  auto [kept, dropped] = filter_degenerate(std::move(groups));
  report.groups_filtered = dropped;
  report.groups_evaluated = static_cast<int>(kept.size());
  if (kept.empty()) return report;

  report.map = mean_average_precision(kept);
  report.mrr = mean_reciprocal_rank(kept);
  report.p_at_1 = precision_at_1(kept);

  const int n = static_cast<int>(kept[0].candidates.size());
  const bool uniform = std::all_of(kept.begin(), kept.end(), [&](const RankedGroup& g) {
    return static_cast<int>(g.candidates.size()) == n;
  });
  if (uniform) {
    for (int k : {1, 2, 5}) {
      if (k < n) report.recall_at[{n, k}] = recall_at_k(kept, n, k);
    }
  }

  // R_2@1 over (positive, first negative) pairs; only meaningful when every
  // group has a single positive.
  const bool single_positive =
      std::all_of(kept.begin(), kept.end(), [](const RankedGroup& g) {
        return positive_count(g) == 1;
      });
  if (single_positive && n != 2) {
    std::vector<RankedGroup> pairs;
    pairs.reserve(kept.size());
    for (const RankedGroup& g : kept) {
      RankedGroup pair;
      pair.group_id = g.group_id;
      const Candidate* first_negative = nullptr;
      const Candidate* positive = nullptr;
      for (const Candidate& c : g.candidates) {
        if (c.label == 1 && !positive) positive = &c;
        if (c.label == 0 && !first_negative) first_negative = &c;
      }
      pair.candidates = {*positive, *first_negative};
      pairs.push_back(std::move(pair));
    }
    report.recall_at[{2, 1}] = recall_at_k(pairs, 2, 1);
  }
  return report;
}

std::vector<RankedGroup> group_scored_examples(const std::vector<EvalExample>& examples,
                                               const std::vector<double>& scores) {
  if (examples.size() != scores.size()) {
    throw std::invalid_argument("group_scored_examples: size mismatch");
  }
  std::vector<RankedGroup> groups;
  std::unordered_map<std::string, size_t> index;
  for (size_t i = 0; i < examples.size(); ++i) {
    auto [it, inserted] = index.try_emplace(examples[i].group_id, groups.size());
    if (inserted) {
      groups.push_back(RankedGroup{examples[i].group_id, {}});
    }
    RankedGroup& g = groups[it->second];
    g.candidates.push_back(
        Candidate{scores[i], examples[i].example.label, static_cast<int>(g.candidates.size())});
  }
  return groups;
}

MetricReport evaluate(const ModelParams& params, const Vocabulary& vocab,
                      const std::string& eval_path) {
  const ShapeConfig shape{params.config.max_len, params.config.max_turns};
  const std::vector<EvalExample> examples = load_eval_dataset(eval_path, vocab, shape);
  std::vector<double> scores(examples.size());
  for (size_t i = 0; i < examples.size(); ++i) {
    scores[i] = forward(examples[i].example, params);
  }
  return compute_metrics(group_scored_examples(examples, scores));
}

namespace {

std::string metric_key(int n, int k) {
  return "R" + std::to_string(n) + "@" + std::to_string(k);
}

bool wanted(const std::vector<std::string>& which, const std::string& key) {
  if (which.empty()) return true;
  for (const auto& w : which) {
    std::string lw = w;
    std::transform(lw.begin(), lw.end(), lw.begin(), [](unsigned char c) {
      return static_cast<char>(std::tolower(c));
    });
    std::string lk = key;
    std::transform(lk.begin(), lk.end(), lk.begin(), [](unsigned char c) {
      return static_cast<char>(std::tolower(c));
    });
    if (lw == lk) return true;
  }
  return false;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << std::fixed << v;
  return os.str();
}

}  // namespace

std::string report_table(const MetricReport& report) {
  std::ostringstream os;
  os << "groups evaluated: " << report.groups_evaluated
     << "  (filtered: " << report.groups_filtered << ")\n";
  auto row = [&os](const std::string& name, double value) {
    os << name;
    for (size_t i = name.size(); i < 8; ++i) os << ' ';
    os << fmt(value) << "\n";
  };
  if (report.map) row("MAP", *report.map);
  if (report.mrr) row("MRR", *report.mrr);
  if (report.p_at_1) row("P@1", *report.p_at_1);
  for (const auto& [nk, value] : report.recall_at) row(metric_key(nk.first, nk.second), value);
  return os.str();
}

std::string report_json(const MetricReport& report, const std::vector<std::string>& which) {
  std::ostringstream os;
  os.precision(17);
  os << "{";
  bool first = true;
  auto emit = [&](const std::string& key, double value) {
    if (!wanted(which, key)) return;
    if (!first) os << ", ";
    first = false;
    os << "\"" << key << "\": " << value;
  };
  if (report.map) emit("MAP", *report.map);
  if (report.mrr) emit("MRR", *report.mrr);
  if (report.p_at_1) emit("P@1", *report.p_at_1);
  for (const auto& [nk, value] : report.recall_at) emit(metric_key(nk.first, nk.second), value);
  if (!first) os << ", ";
  os << "\"groups_evaluated\": " << report.groups_evaluated
     << ", \"groups_filtered\": " << report.groups_filtered << "}";
  return os.str();
}

}  // namespace smn
