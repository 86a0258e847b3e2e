#include "diact/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <stdexcept>

#include "diact/error.hpp"

namespace diact::metrics {
namespace {

void require_pairs(std::span<const EvaluationPair> pairs, const char* what) {
  if (pairs.empty()) throw std::invalid_argument(std::string(what) + ": no evaluation pairs");
  for (const auto& pair : pairs) {
    if (pair.gold.empty() || pair.predicted.empty()) {
      throw std::invalid_argument(std::string(what) + ": label sets must be non-empty (map Nil explicitly)");
    }
  }
}

std::size_t intersection_size(const std::vector<int>& a, const std::vector<int>& b) {
  std::size_t count = 0;
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) ++i;
    else if (*j < *i) ++j;
    else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

template <typename Term>
double mean_over(std::span<const EvaluationPair> pairs, const char* what, Term term) {
  require_pairs(pairs, what);
  double total = 0.0;
  for (const auto& pair : pairs) {
    const auto both = static_cast<double>(intersection_size(pair.gold, pair.predicted));
    total += term(both, static_cast<double>(pair.gold.size()), static_cast<double>(pair.predicted.size()));
  }
  return total / static_cast<double>(pairs.size());
}

double round_to(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

double log_add(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

}  // namespace

int nil_index(Level level) {
  if (level == Level::L1) throw std::invalid_argument("Level 1 has no Nil label");
  return static_cast<int>(LabelSpace::canonical().size(level));
}

int evaluation_label_count(Level level) {
  const auto size = static_cast<int>(LabelSpace::canonical().size(level));
  return level == Level::L1 ? size : size + 1;
}

std::vector<int> with_nil(std::vector<int> labels, Level level) {
  if (labels.empty() && level != Level::L1) labels.push_back(nil_index(level));
  return labels;
}

double exact_match_ratio(std::span<const EvaluationPair> pairs) {
  require_pairs(pairs, "exact_match_ratio");
  std::size_t matches = 0;
  for (const auto& pair : pairs) matches += pair.gold == pair.predicted ? 1 : 0;
  return static_cast<double>(matches) / static_cast<double>(pairs.size());
}

double multilabel_accuracy(std::span<const EvaluationPair> pairs) {
  return mean_over(pairs, "multilabel_accuracy", [](double both, double y, double z) { return both / (y + z - both); });
}

double multilabel_precision(std::span<const EvaluationPair> pairs) {
  return mean_over(pairs, "multilabel_precision", [](double both, double, double z) { return both / z; });
}

double multilabel_recall(std::span<const EvaluationPair> pairs) {
  return mean_over(pairs, "multilabel_recall", [](double both, double y, double) { return both / y; });
}

double multilabel_f1(std::span<const EvaluationPair> pairs) {
  return mean_over(pairs, "multilabel_f1", [](double both, double y, double z) { return 2.0 * both / (y + z); });
}

double hamming_loss(std::span<const EvaluationPair> pairs, int label_count) {
  require_pairs(pairs, "hamming_loss");
  if (label_count < 1) throw std::invalid_argument("hamming_loss: label count must be positive");
  std::size_t flips = 0;
  for (const auto& pair : pairs) {
    // Symmetric difference size.
    flips += pair.gold.size() + pair.predicted.size() - 2 * intersection_size(pair.gold, pair.predicted);
  }
  return static_cast<double>(flips) / (static_cast<double>(pairs.size()) * static_cast<double>(label_count));
}

double single_label_accuracy(std::span<const EvaluationPair> pairs) {
  require_pairs(pairs, "single_label_accuracy");
  for (const auto& pair : pairs) {
    if (pair.gold.size() != 1 || pair.predicted.size() != 1) {
      throw std::invalid_argument("single_label_accuracy: every set must hold exactly one label");
    }
  }
  return exact_match_ratio(pairs);
}

nlohmann::json MultiLabelReport::to_json() const {
  return {{"mr", round_to(mr, 2)}, {"acc", round_to(acc, 2)}, {"p", round_to(p, 2)}, {"r", round_to(r, 2)},
          {"f1", round_to(f1, 2)}, {"hl", round_to(hl, 4)},   {"n", n}};
}

MultiLabelReport MultiLabelReport::from_json(const nlohmann::json& json) {
  MultiLabelReport report;
  try {
    report.mr = json.at("mr").get<double>();
    report.acc = json.at("acc").get<double>();
    report.p = json.at("p").get<double>();
    report.r = json.at("r").get<double>();
    report.f1 = json.at("f1").get<double>();
    report.hl = json.at("hl").get<double>();
    report.n = json.at("n").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("metric report: ") + e.what());
  }
  return report;
}

MultiLabelReport evaluate(std::span<const EvaluationPair> pairs, int label_count) {
  MultiLabelReport report;
  report.mr = 100.0 * exact_match_ratio(pairs);
  report.acc = 100.0 * multilabel_accuracy(pairs);
  report.p = 100.0 * multilabel_precision(pairs);
  report.r = 100.0 * multilabel_recall(pairs);
  report.f1 = 100.0 * multilabel_f1(pairs);
  report.hl = hamming_loss(pairs, label_count);
  report.n = pairs.size();
  return report;
}

std::vector<LabelPrf> per_label_prf(std::span<const EvaluationPair> pairs, int label_count) {
  std::vector<LabelPrf> table(static_cast<std::size_t>(std::max(label_count, 0)));
  for (int l = 0; l < label_count; ++l) table[static_cast<std::size_t>(l)].label = l;
  const auto bump = [&](int label, std::size_t LabelPrf::*field) {
    if (label < 0 || label >= label_count) throw std::invalid_argument("per_label_prf: label outside inventory");
    ++(table[static_cast<std::size_t>(label)].*field);
  };
  for (const auto& pair : pairs) {
    for (int label : pair.predicted) {
      const bool hit = std::binary_search(pair.gold.begin(), pair.gold.end(), label);
      bump(label, hit ? &LabelPrf::true_positives : &LabelPrf::false_positives);
    }
    for (int label : pair.gold) {
      if (!std::binary_search(pair.predicted.begin(), pair.predicted.end(), label)) {
        bump(label, &LabelPrf::false_negatives);
      }
    }
  }
  for (auto& row : table) {
    const auto predicted = row.true_positives + row.false_positives;
    row.never_predicted = predicted == 0;
    row.no_support = row.support() == 0;
    row.precision = row.never_predicted ? 0.0 : static_cast<double>(row.true_positives) / static_cast<double>(predicted);
    row.recall = row.no_support ? 0.0 : static_cast<double>(row.true_positives) / static_cast<double>(row.support());
    row.f1 = row.precision + row.recall > 0.0 ? 2.0 * row.precision * row.recall / (row.precision + row.recall) : 0.0;
  }
  return table;
}

RunStatistics aggregate_runs(std::span<const double> values) {
  if (values.size() < 2) throw std::invalid_argument("aggregate_runs: need at least two runs");
  RunStatistics stats;
  stats.run_count = values.size();
  double total = 0.0;
  for (double v : values) total += v;
  stats.mean = total / static_cast<double>(values.size());
  double squares = 0.0;
  for (double v : values) squares += (v - stats.mean) * (v - stats.mean);
  stats.stddev = std::sqrt(squares / static_cast<double>(values.size()));
  return stats;
}

SignificanceResult binomial_significance(std::size_t correct_a, std::size_t correct_b, std::size_t n) {
  if (n < 1) throw std::invalid_argument("binomial_significance: n must be at least 1");
  if (correct_a > n || correct_b > n) throw std::invalid_argument("binomial_significance: more successes than trials");
  SignificanceResult result;
  result.n = n;
  result.successes_a = correct_a;
  result.successes_b = correct_b;
  const std::size_t high = std::max(correct_a, correct_b);
  const std::size_t low = std::min(correct_a, correct_b);
  const auto trials = static_cast<double>(n);
  const double floor = 1.0 / (2.0 * trials);
  result.null_probability = std::clamp(static_cast<double>(low) / trials, floor, 1.0 - floor);
  if (high == low) {
    result.p_value = 1.0;
    result.log10_p_value = 0.0;
    return result;
  }
  const double log_p = std::log(result.null_probability);
  const double log_q = std::log1p(-result.null_probability);
  const double log_n_factorial = std::lgamma(trials + 1.0);
  double log_tail = -std::numeric_limits<double>::infinity();
  for (std::size_t k = high; k <= n; ++k) {
    const auto kk = static_cast<double>(k);
    const double log_term = log_n_factorial - std::lgamma(kk + 1.0) - std::lgamma(trials - kk + 1.0) +
                            kk * log_p + (trials - kk) * log_q;
    log_tail = log_add(log_tail, log_term);
  }
  log_tail = std::min(log_tail, 0.0);
  result.p_value = std::exp(log_tail);
  result.log10_p_value = log_tail / std::log(10.0);
  result.significant = result.p_value < kSignificanceLevel;
  return result;
}

}  // namespace diact::metrics
