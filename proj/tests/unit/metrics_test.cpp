#include <gtest/gtest.h>

#include <cmath>

#include "../common/metric_oracles.hpp"
#include "diact/metrics.hpp"

namespace diact::metrics {
namespace {

EvaluationPair pair(std::vector<int> gold, std::vector<int> predicted) {
  return EvaluationPair{std::move(gold), std::move(predicted), Speaker::User};
}

TEST(Metrics, LabelCountsIncludeNil) {
  EXPECT_EQ(evaluation_label_count(Level::L1), 11);
  EXPECT_EQ(evaluation_label_count(Level::L2), 11);
  EXPECT_EQ(evaluation_label_count(Level::L3), 14);
  EXPECT_EQ(nil_index(Level::L2), 10);
  EXPECT_EQ(nil_index(Level::L3), 13);
  EXPECT_EQ(with_nil({}, Level::L3), std::vector<int>{13});
  EXPECT_EQ(with_nil({2, 4}, Level::L2), (std::vector<int>{2, 4}));
  EXPECT_TRUE(with_nil({}, Level::L1).empty());
}

TEST(Metrics, HandCases) {
  const std::vector<EvaluationPair> half{pair({0, 1}, {0})};
  EXPECT_EQ(multilabel_accuracy(half), 0.5);

  const std::vector<EvaluationPair> swapped{pair({0, 1}, {0, 2})};
  EXPECT_EQ(multilabel_precision(swapped), 0.5);
  EXPECT_EQ(multilabel_recall(swapped), 0.5);
  EXPECT_EQ(multilabel_f1(swapped), 0.5);
  EXPECT_EQ(hamming_loss(swapped, 4), 0.5);
  EXPECT_EQ(exact_match_ratio(swapped), 0.0);

  const std::vector<EvaluationPair> superset{pair({0, 1}, {0, 1, 2, 3})};
  EXPECT_EQ(multilabel_recall(superset), 1.0);
  EXPECT_EQ(multilabel_precision(superset), 0.5);
  EXPECT_DOUBLE_EQ(multilabel_f1(superset), 2.0 / 3.0);

  const std::vector<EvaluationPair> same{pair({1, 3}, {1, 3}), pair({2}, {2})};
  EXPECT_EQ(exact_match_ratio(same), 1.0);
  EXPECT_EQ(multilabel_accuracy(same), 1.0);
  EXPECT_EQ(hamming_loss(same, 11), 0.0);

  const std::vector<EvaluationPair> three_of_four{pair({1}, {1}), pair({2}, {2}), pair({3}, {3}), pair({4}, {5})};
  EXPECT_EQ(single_label_accuracy(three_of_four), 0.75);
}

TEST(Metrics, ErrorsOnEmptyInput) {
  EXPECT_THROW(exact_match_ratio({}), std::invalid_argument);
  EXPECT_THROW(multilabel_f1({}), std::invalid_argument);
  const std::vector<EvaluationPair> empty_set{pair({}, {1})};
  EXPECT_THROW(multilabel_accuracy(empty_set), std::invalid_argument);
  const std::vector<EvaluationPair> multi{pair({1, 2}, {1})};
  EXPECT_THROW(single_label_accuracy(multi), std::invalid_argument);
  EXPECT_THROW(hamming_loss(multi, 0), std::invalid_argument);
}

TEST(Metrics, MatchBruteForceOracle) {
  for (int label_count : {11, 14}) {
    const auto pairs = oracle::random_pairs(static_cast<std::uint64_t>(label_count), 2000, label_count, false);
    const auto expected = oracle::evaluate(pairs, label_count);
    EXPECT_EQ(exact_match_ratio(pairs), expected.mr);
    EXPECT_EQ(hamming_loss(pairs, label_count), expected.hl);
    EXPECT_NEAR(multilabel_accuracy(pairs), expected.acc, 1e-12);
    EXPECT_NEAR(multilabel_precision(pairs), expected.p, 1e-12);
    EXPECT_NEAR(multilabel_recall(pairs), expected.r, 1e-12);
    EXPECT_NEAR(multilabel_f1(pairs), expected.f1, 1e-12);
  }
}

TEST(Metrics, PerExampleOrdering) {
  const auto pairs = oracle::random_pairs(5, 500, 11, false);
  for (const auto& p : pairs) {
    const std::vector<EvaluationPair> one{p};
    EXPECT_LE(exact_match_ratio(one), multilabel_accuracy(one));
    EXPECT_LE(multilabel_accuracy(one), multilabel_f1(one) + 1e-15);
  }
}

TEST(Metrics, SingletonIdentity) {
  const auto pairs = oracle::random_pairs(9, 3000, 11, true);
  const double mr = exact_match_ratio(pairs);
  EXPECT_NEAR(multilabel_accuracy(pairs), mr, 1e-12);
  EXPECT_NEAR(multilabel_precision(pairs), mr, 1e-12);
  EXPECT_NEAR(multilabel_recall(pairs), mr, 1e-12);
  EXPECT_NEAR(multilabel_f1(pairs), mr, 1e-12);
  EXPECT_NEAR(hamming_loss(pairs, 11), (1.0 - mr) * 2.0 / 11.0, 1e-12);
  EXPECT_EQ(single_label_accuracy(pairs), mr);
}

TEST(Metrics, ReportIsInPercentAndRounds) {
  const std::vector<EvaluationPair> pairs{pair({0, 1}, {0}), pair({2}, {2}), pair({3}, {4})};
  const auto report = evaluate(pairs, 11);
  EXPECT_DOUBLE_EQ(report.mr, 100.0 / 3.0);
  EXPECT_DOUBLE_EQ(report.acc, 50.0);
  EXPECT_EQ(report.n, 3u);
  const auto json = report.to_json();
  EXPECT_EQ(json.at("mr").get<double>(), 33.33);
  EXPECT_EQ(json.at("hl").get<double>(), 0.0909);
  const auto back = MultiLabelReport::from_json(json);
  EXPECT_EQ(back.acc, 50.0);
}

TEST(PerLabel, FivePairFixture) {
  const std::vector<EvaluationPair> pairs{pair({0, 1}, {0}), pair({1}, {1, 2}), pair({2}, {0}), pair({0, 3}, {0, 3}),
                                          pair({1}, {2})};
  const auto table = per_label_prf(pairs, 5);
  ASSERT_EQ(table.size(), 5u);
  // Confusion counts tallied by hand from the five pairs.
  const std::size_t tp[] = {2, 1, 0, 1, 0};
  const std::size_t fp[] = {1, 0, 2, 0, 0};
  const std::size_t fn[] = {0, 2, 1, 0, 0};
  for (std::size_t l = 0; l < 5; ++l) {
    EXPECT_EQ(table[l].true_positives, tp[l]) << l;
    EXPECT_EQ(table[l].false_positives, fp[l]) << l;
    EXPECT_EQ(table[l].false_negatives, fn[l]) << l;
  }
  EXPECT_DOUBLE_EQ(table[0].precision, 2.0 / 3.0);
  EXPECT_EQ(table[0].recall, 1.0);
  EXPECT_DOUBLE_EQ(table[0].f1, 0.8);
  EXPECT_EQ(table[1].precision, 1.0);
  EXPECT_DOUBLE_EQ(table[1].recall, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(table[1].f1, 0.5);
  EXPECT_EQ(table[2].f1, 0.0);
  EXPECT_EQ(table[3].f1, 1.0);
  EXPECT_TRUE(table[4].never_predicted);
  EXPECT_TRUE(table[4].no_support);
  EXPECT_FALSE(table[2].never_predicted);
}

TEST(PerLabel, NeverPredictedIsFlagged) {
  const std::vector<EvaluationPair> pairs{pair({1}, {0}), pair({0}, {0})};
  const auto table = per_label_prf(pairs, 2);
  EXPECT_TRUE(table[1].never_predicted);
  EXPECT_EQ(table[1].recall, 0.0);
  EXPECT_EQ(table[1].support(), 1u);
  EXPECT_THROW(per_label_prf(pairs, 1), std::invalid_argument);
}

TEST(AggregateRuns, MeanAndPopulationStd) {
  const std::vector<double> identical(10, 3.5);
  EXPECT_EQ(aggregate_runs(identical).stddev, 0.0);
  const std::vector<double> two{0.0, 1.0};
  EXPECT_EQ(aggregate_runs(two).mean, 0.5);
  EXPECT_EQ(aggregate_runs(two).stddev, 0.5);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(60.0, 100.0);
  std::vector<double> values(10);
  for (double& v : values) v = u(rng);
  double mean = 0.0;
  for (double v : values) mean += v / 10.0;
  double variance = 0.0;
  for (double v : values) variance += (v - mean) * (v - mean) / 10.0;
  const auto stats = aggregate_runs(values);
  EXPECT_NEAR(stats.mean, mean, 1e-12);
  EXPECT_NEAR(stats.stddev, std::sqrt(variance), 1e-12);
  EXPECT_EQ(stats.run_count, 10u);
  EXPECT_THROW(aggregate_runs(std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Binomial, AnalyticCases) {
  const auto ten = binomial_significance(10, 5, 10);
  EXPECT_DOUBLE_EQ(ten.p_value, std::pow(0.5, 10));
  EXPECT_EQ(ten.null_probability, 0.5);
  EXPECT_TRUE(ten.significant);
  EXPECT_EQ(binomial_significance(5, 10, 10).p_value, ten.p_value);
  EXPECT_EQ(binomial_significance(7, 7, 10).p_value, 1.0);
  EXPECT_FALSE(binomial_significance(7, 7, 10).significant);
  // One success above a null of 1/2 over 2 trials: P(X >= 2) = 1/4.
  EXPECT_DOUBLE_EQ(binomial_significance(2, 1, 2).p_value, 0.25);
}

TEST(Binomial, DegenerateNullIsClamped) {
  const auto r = binomial_significance(3, 0, 10);
  EXPECT_EQ(r.null_probability, 0.05);
  double tail = 0.0;
  for (int k = 3; k <= 10; ++k) {
    tail += std::tgamma(11.0) / (std::tgamma(k + 1.0) * std::tgamma(11.0 - k)) * std::pow(0.05, k) *
            std::pow(0.95, 10 - k);
  }
  EXPECT_NEAR(r.p_value, tail, 1e-12);
  EXPECT_EQ(binomial_significance(10, 10, 10).p_value, 1.0);
  EXPECT_THROW(binomial_significance(11, 1, 10), std::invalid_argument);
  EXPECT_THROW(binomial_significance(0, 0, 0), std::invalid_argument);
}

TEST(Binomial, ExtremesStayFiniteInLogSpace) {
  const auto r = binomial_significance(23000, 11500, 23000);
  EXPECT_EQ(r.p_value, 0.0);
  EXPECT_NEAR(r.log10_p_value, 23000 * std::log10(0.5), 1e-6);
  const auto close = binomial_significance(21091, 20700, 23000);
  EXPECT_TRUE(close.significant);
  EXPECT_LT(close.p_value, 1e-3);
}

TEST(Binomial, MatchesMonteCarlo) {
  std::mt19937_64 rng(77);
  for (int c = 0; c < 5; ++c) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(5, 120)(rng);
    const std::size_t low = std::uniform_int_distribution<std::size_t>(1, n - 1)(rng);
    const std::size_t high = std::min(n, low + std::uniform_int_distribution<std::size_t>(1, 6)(rng));
    const auto r = binomial_significance(high, low, n);
    const auto mc = oracle::monte_carlo_tail(n, r.null_probability, high, 100000, 100 + c);
    EXPECT_LE(std::abs(r.p_value - mc.probability), 3.0 * std::max(mc.standard_error, 1e-5)) << n << " " << low;
  }
}

}  // namespace
}  // namespace diact::metrics
