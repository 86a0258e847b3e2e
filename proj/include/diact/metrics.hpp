#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "diact/labels.hpp"

namespace diact::metrics {

// Gold and predicted label sets of one segment, sorted and non-empty. At L2
// and L3 Nil is an explicit label whose index equals the inventory size.
struct EvaluationPair {
  std::vector<int> gold;
  std::vector<int> predicted;
  Speaker speaker = Speaker::User;
};

int nil_index(Level level);
// Label count of a level including Nil at L2/L3 (11, 11, 14).
int evaluation_label_count(Level level);
// Replaces an empty L2/L3 set with {Nil}; L1 sets pass through.
std::vector<int> with_nil(std::vector<int> labels, Level level);

// Ratios in [0, 1]; each throws std::invalid_argument on an empty pair list
// or an empty label set.
double exact_match_ratio(std::span<const EvaluationPair> pairs);
double multilabel_accuracy(std::span<const EvaluationPair> pairs);
double multilabel_precision(std::span<const EvaluationPair> pairs);
double multilabel_recall(std::span<const EvaluationPair> pairs);
double multilabel_f1(std::span<const EvaluationPair> pairs);
double hamming_loss(std::span<const EvaluationPair> pairs, int label_count);
// Requires singleton sets.
double single_label_accuracy(std::span<const EvaluationPair> pairs);

struct MultiLabelReport {
  double mr = 0.0;  // percentages
  double acc = 0.0;
  double p = 0.0;
  double r = 0.0;
  double f1 = 0.0;
  double hl = 0.0;  // in [0, 1]
  std::size_t n = 0;

  // Percentages rounded to 2 decimals, hl to 4.
  nlohmann::json to_json() const;
  static MultiLabelReport from_json(const nlohmann::json& json);
};

MultiLabelReport evaluate(std::span<const EvaluationPair> pairs, int label_count);

struct LabelPrf {
  int label = 0;
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 0.0;  // 0 and flagged when the label was never predicted
  double recall = 0.0;     // 0 and flagged when the label never occurs in gold
  double f1 = 0.0;
  bool never_predicted = false;
  bool no_support = false;

  std::size_t support() const { return true_positives + false_negatives; }
};

std::vector<LabelPrf> per_label_prf(std::span<const EvaluationPair> pairs, int label_count);

struct RunStatistics {
  double mean = 0.0;
  double stddev = 0.0;  // population (divisor n)
  std::size_t run_count = 0;
};

RunStatistics aggregate_runs(std::span<const double> values);

struct SignificanceResult {
  double p_value = 1.0;
  double log10_p_value = 0.0;
  std::size_t n = 0;
  std::size_t successes_a = 0;
  std::size_t successes_b = 0;
  double null_probability = 0.0;
  bool significant = false;  // p_value < 0.05
};

inline constexpr double kSignificanceLevel = 0.05;

// One-sided exact binomial test: P(X >= max(a, b)) for X ~ Binomial(n, p0)
// with p0 = min(a, b) / n, clamped to [1/(2n), 1 - 1/(2n)]. Equal counts give
// p = 1. The tail is summed in log space.
SignificanceResult binomial_significance(std::size_t correct_a, std::size_t correct_b, std::size_t n);

}  // namespace diact::metrics
