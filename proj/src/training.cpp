#include "diact/training.hpp"

#include <cmath>
#include <numeric>

#include "diact/error.hpp"
#include "diact/optim.hpp"

namespace diact::model {
namespace {

using nn::Tensor;

constexpr std::uint64_t kShuffleStream = 0x5EED01;
constexpr std::uint64_t kDropoutStream = 0x5EED02;

std::vector<ClassifierInput> inputs_of(std::span<const Example* const> batch) {
  std::vector<ClassifierInput> inputs;
  inputs.reserve(batch.size());
  for (const Example* e : batch) inputs.push_back({e->tokens, e->context});
  return inputs;
}

Tensor targets_of(std::span<const Example* const> batch, int classes) {
  Tensor targets = Tensor::matrix(batch.size(), static_cast<std::size_t>(classes));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b]->target.size() != static_cast<std::size_t>(classes)) {
      throw DataError("example target has width " + std::to_string(batch[b]->target.size()) + ", expected " +
                      std::to_string(classes));
    }
    std::copy(batch[b]->target.begin(), batch[b]->target.end(), targets.row(b).begin());
  }
  return targets;
}

}  // namespace

void TrainingConfig::validate() const {
  if (batch_size < 1) throw DataError("batch_size must be at least 1");
  if (patience < 1) throw DataError("patience must be at least 1");
  if (max_epochs < 1) throw DataError("max_epochs must be at least 1");
  if (!(learning_rate >= 0.0)) throw DataError("learning_rate must be non-negative");
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw DataError("val_fraction must be in (0, 1)");
}

nlohmann::json TrainingConfig::to_json() const {
  return {{"batch_size", batch_size}, {"patience", patience},   {"max_epochs", max_epochs},
          {"seed", seed},             {"learning_rate", learning_rate}, {"val_fraction", val_fraction},
          {"threshold", threshold}};
}

TrainingConfig TrainingConfig::from_json(const nlohmann::json& json) {
  TrainingConfig config;
  try {
    config.batch_size = json.value("batch_size", config.batch_size);
    config.patience = json.value("patience", config.patience);
    config.max_epochs = json.value("max_epochs", config.max_epochs);
    config.seed = json.value("seed", config.seed);
    config.learning_rate = json.value("learning_rate", config.learning_rate);
    config.val_fraction = json.value("val_fraction", config.val_fraction);
    config.threshold = json.value("threshold", config.threshold);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("training config: ") + e.what());
  }
  config.validate();
  return config;
}

double batch_loss(const LevelClassifier& classifier, const Tensor& probabilities, const Tensor& targets) {
  return classifier.single_label() ? nn::categorical_cross_entropy(probabilities, targets)
                                   : nn::binary_cross_entropy(probabilities, targets);
}

double accumulate_gradients(LevelClassifier& classifier, std::span<const Example* const> batch, RandomSource& rng) {
  const auto inputs = inputs_of(batch);
  const auto trace = classifier.forward(inputs, true, &rng);
  const Tensor targets = targets_of(batch, classifier.classes());
  const double loss = batch_loss(classifier, trace.probabilities, targets);
  if (!std::isfinite(loss)) throw NumericError("training diverged: non-finite loss");
  const Tensor dlogits = classifier.single_label()
                             ? nn::softmax_cross_entropy_logit_gradient(trace.probabilities, targets)
                             : nn::sigmoid_binary_cross_entropy_logit_gradient(trace.probabilities, targets);
  classifier.backward(trace, dlogits);
  return loss;
}

double validation_metric(const LevelClassifier& classifier, std::span<const Example> examples, double threshold) {
  if (examples.empty()) throw DataError("empty validation set");
  std::size_t correct = 0;
  for (const auto& e : examples) {
    const auto probs = classifier.predict_one(e.tokens, e.context);
    if (classifier.single_label()) {
      const int predicted = predict_single(probs);
      correct += e.target[static_cast<std::size_t>(predicted)] == 1.0 ? 1 : 0;
    } else {
      bool match = true;
      for (std::size_t c = 0; c < probs.size() && match; ++c) {
        match = (probs[c] >= threshold) == (e.target[c] == 1.0);
      }
      correct += match ? 1 : 0;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

TrainingHistory train(LevelClassifier& classifier, std::span<const Example> train_set,
                      std::span<const Example> validation_set, const TrainingConfig& config) {
  config.validate();
  if (train_set.empty()) throw DataError("empty training split");
  if (validation_set.empty()) throw DataError("empty validation split");

  RandomSource shuffle_rng(derive_seed(config.seed, kShuffleStream));
  RandomSource dropout_rng(derive_seed(config.seed, kDropoutStream));
  nn::AdamState adam;
  adam.config.learning_rate = config.learning_rate;
  auto params = classifier.trainable_parameters();
  for (auto* p : params) p->zero_grad();

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<const Example*> batch;
  std::vector<nn::Tensor> best_values;
  TrainingHistory history;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(&train_set[order[i]]);
      loss_sum += accumulate_gradients(classifier, batch, dropout_rng) * static_cast<double>(batch.size());
      nn::adam_step(params, adam);
    }
    const double metric = validation_metric(classifier, validation_set, config.threshold);
    history.epochs.push_back({epoch, loss_sum / static_cast<double>(train_set.size()), metric});

    if (epoch == 1 || metric > history.best_metric) {
      history.best_metric = metric;
      history.best_epoch = epoch;
      best_values.clear();
      for (const auto* p : params) best_values.push_back(p->value);
    } else if (epoch - history.best_epoch >= config.patience) {
      break;
    }
  }
  for (std::size_t k = 0; k < params.size(); ++k) params[k]->value = best_values[k];
  return history;
}

}  // namespace diact::model
