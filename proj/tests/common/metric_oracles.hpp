#pragma once

// Brute-force reference implementations of the evaluation metrics, written
// as plain per-label loops so they share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "diact/metrics.hpp"

namespace diact::oracle {

inline bool contains(const std::vector<int>& set, int label) {
  return std::find(set.begin(), set.end(), label) != set.end();
}

struct PairCounts {
  int gold = 0;
  int predicted = 0;
  int both = 0;
  int either = 0;
  int flips = 0;
};

inline PairCounts count(const metrics::EvaluationPair& pair, int label_count) {
  PairCounts c;
  for (int l = 0; l < label_count; ++l) {
    const bool y = contains(pair.gold, l);
    const bool z = contains(pair.predicted, l);
    c.gold += y;
    c.predicted += z;
    c.both += y && z;
    c.either += y || z;
    c.flips += y != z;
  }
  return c;
}

struct Metrics {
  double mr = 0, acc = 0, p = 0, r = 0, f1 = 0, hl = 0;
};

inline Metrics evaluate(const std::vector<metrics::EvaluationPair>& pairs, int label_count) {
  Metrics m;
  long matches = 0;
  long flips = 0;
  for (const auto& pair : pairs) {
    const auto c = count(pair, label_count);
    matches += c.flips == 0;
    flips += c.flips;
    m.acc += static_cast<double>(c.both) / c.either;
    m.p += static_cast<double>(c.both) / c.predicted;
    m.r += static_cast<double>(c.both) / c.gold;
    m.f1 += 2.0 * c.both / (c.gold + c.predicted);
  }
  const auto n = static_cast<double>(pairs.size());
  m.mr = static_cast<double>(matches) / n;
  m.acc /= n;
  m.p /= n;
  m.r /= n;
  m.f1 /= n;
  m.hl = static_cast<double>(flips) / (n * label_count);
  return m;
}

// Random non-empty sorted label sets; `singleton` draws exactly one label.
inline std::vector<int> random_set(std::mt19937_64& rng, int label_count, bool singleton) {
  std::uniform_int_distribution<int> pick(0, label_count - 1);
  if (singleton) return {pick(rng)};
  std::vector<int> set;
  std::bernoulli_distribution keep(2.0 / label_count);
  for (int l = 0; l < label_count; ++l) {
    if (keep(rng)) set.push_back(l);
  }
  if (set.empty()) set.push_back(pick(rng));
  return set;
}

inline std::vector<metrics::EvaluationPair> random_pairs(std::uint64_t seed, std::size_t n, int label_count,
                                                         bool singleton) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution copy(0.3);
  std::vector<metrics::EvaluationPair> pairs(n);
  for (auto& pair : pairs) {
    pair.gold = random_set(rng, label_count, singleton);
    pair.predicted = copy(rng) ? pair.gold : random_set(rng, label_count, singleton);
  }
  return pairs;
}

// Monte Carlo estimate of P(X >= k), X ~ Binomial(n, p), with its standard error.
struct TailEstimate {
  double probability = 0.0;
  double standard_error = 0.0;
};

inline TailEstimate monte_carlo_tail(std::size_t n, double p, std::size_t k, std::size_t draws, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::binomial_distribution<std::size_t> binomial(n, p);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < draws; ++i) hits += binomial(rng) >= k;
  TailEstimate e;
  e.probability = static_cast<double>(hits) / static_cast<double>(draws);
  e.standard_error = std::sqrt(e.probability * (1.0 - e.probability) / static_cast<double>(draws));
  return e;
}

}  // namespace diact::oracle
