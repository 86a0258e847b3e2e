#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "diact/classifier.hpp"

namespace diact::model {

struct TrainingConfig {
  int batch_size = 512;
  int patience = 10;
  int max_epochs = 200;
  std::uint64_t seed = 0;
  double learning_rate = 0.001;
  double val_fraction = 0.1;
  double threshold = 0.5;  // multi-label decision threshold for the stopping metric

  void validate() const;
  nlohmann::json to_json() const;
  static TrainingConfig from_json(const nlohmann::json& json);
  friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

// One training or evaluation instance: encoded tokens, the precomputed label
// context and a one-hot / multi-hot target row.
struct Example {
  std::vector<int> tokens;
  std::vector<double> context;
  std::vector<double> target;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_metric = 0.0;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;
  double best_metric = 0.0;

  int stopped_epoch() const { return epochs.empty() ? 0 : epochs.back().epoch; }
};

double batch_loss(const LevelClassifier& classifier, const nn::Tensor& probabilities, const nn::Tensor& targets);

// Forward, loss and backward over a batch; gradients accumulate into the
// classifier. Returns the mean loss.
double accumulate_gradients(LevelClassifier& classifier, std::span<const Example* const> batch, RandomSource& rng);

// Accuracy for single-label heads, exact match ratio for multi-label heads.
double validation_metric(const LevelClassifier& classifier, std::span<const Example> examples, double threshold);

// Mini-batch Adam with per-epoch seeded shuffling and early stopping on the
// validation metric. The classifier ends with the parameters of the best
// validation epoch.
TrainingHistory train(LevelClassifier& classifier, std::span<const Example> train_set,
                      std::span<const Example> validation_set, const TrainingConfig& config);

}  // namespace diact::model
