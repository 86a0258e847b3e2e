#include "diact/gradcheck.hpp"

#include "diact/error.hpp"
#include "diact/training.hpp"

namespace diact::model {
namespace {

std::vector<Example> random_batch(const LevelClassifier& classifier, const GradcheckConfig& config,
                                  RandomSource& rng) {
  std::vector<Example> batch;
  for (int b = 0; b < config.batch; ++b) {
    Example e;
    const auto length = 1 + static_cast<std::size_t>(rng.uniform_index(static_cast<std::uint64_t>(config.max_length)));
    for (std::size_t t = 0; t < length; ++t) {
      e.tokens.push_back(1 + static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(config.vocabulary - 1))));
    }
    e.context.resize(static_cast<std::size_t>(classifier.context_size()));
    for (double& c : e.context) c = rng.bernoulli(0.3) ? 1.0 : 0.0;
    e.target.assign(static_cast<std::size_t>(classifier.classes()), 0.0);
    if (classifier.single_label()) {
      e.target[static_cast<std::size_t>(rng.uniform_index(e.target.size()))] = 1.0;
    } else {
      for (double& y : e.target) y = rng.bernoulli(0.3) ? 1.0 : 0.0;
    }
    batch.push_back(std::move(e));
  }
  return batch;
}

}  // namespace

GradcheckConfig GradcheckConfig::from_json(const nlohmann::json& json) {
  GradcheckConfig config;
  try {
    config.vocabulary = json.value("vocabulary", config.vocabulary);
    config.embedding_dimension = json.value("embedding_dimension", config.embedding_dimension);
    config.filters = json.value("filters", config.filters);
    config.hidden = json.value("hidden", config.hidden);
    config.reduction_units = json.value("reduction_units", config.reduction_units);
    config.dropout = json.value("dropout", config.dropout);
    config.value_scale = json.value("value_scale", config.value_scale);
    config.batch = json.value("batch", config.batch);
    config.max_length = json.value("max_length", config.max_length);
    config.samples = json.value("samples", config.samples);
    config.epsilon = json.value("epsilon", config.epsilon);
    config.tolerance = json.value("tolerance", config.tolerance);
    config.seed = json.value("seed", config.seed);
    config.include_embeddings = json.value("include_embeddings", config.include_embeddings);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("gradcheck config: ") + e.what());
  }
  if (config.vocabulary < 3 || config.embedding_dimension < 1 || config.filters < 1 || config.hidden < 1 ||
      config.reduction_units < 1 || config.batch < 1 || config.samples < 1 || !(config.epsilon > 0.0)) {
    throw DataError("gradcheck config: sizes must be positive (vocabulary at least 3)");
  }
  return config;
}

nlohmann::json GradcheckConfig::to_json() const {
  return {{"vocabulary", vocabulary}, {"embedding_dimension", embedding_dimension},
          {"filters", filters},       {"hidden", hidden},
          {"reduction_units", reduction_units}, {"dropout", dropout}, {"value_scale", value_scale},
          {"batch", batch},           {"max_length", max_length},  {"samples", samples},
          {"epsilon", epsilon},       {"tolerance", tolerance},
          {"seed", seed},             {"include_embeddings", include_embeddings}};
}

nn::GradientCheckResult check_classifier(LevelClassifier& classifier, const GradcheckConfig& config,
                                         std::uint64_t seed) {
  RandomSource data_rng(derive_seed(seed, 1));
  const auto batch = random_batch(classifier, config, data_rng);
  std::vector<const Example*> pointers;
  for (const auto& e : batch) pointers.push_back(&e);
  const std::uint64_t dropout_seed = derive_seed(seed, 2);

  // Fresh random values keep ReLU pre-activations away from their kink at 0,
  // which zero-initialized biases over PAD-only windows would sit on.
  RandomSource value_rng(derive_seed(seed, 4));
  for (auto* p : classifier.all_parameters()) {
    const double scale = p->name == "embedding" ? 0.5 : config.value_scale;
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      if (p->name == "embedding" && i < p->value.cols()) continue;
      p->value[i] = value_rng.uniform(-scale, scale);
    }
  }

  auto params = config.include_embeddings ? classifier.trainable_parameters() : classifier.all_parameters();
  if (!config.include_embeddings) params.erase(params.begin());
  for (auto* p : classifier.all_parameters()) p->zero_grad();
  {
    RandomSource dropout_rng(dropout_seed);
    accumulate_gradients(classifier, pointers, dropout_rng);
  }
  const auto loss = [&] {
    RandomSource dropout_rng(dropout_seed);
    std::vector<ClassifierInput> inputs;
    for (const auto& e : batch) inputs.push_back({e.tokens, e.context});
    const auto trace = classifier.forward(inputs, true, &dropout_rng);
    nn::Tensor targets = nn::Tensor::matrix(batch.size(), static_cast<std::size_t>(classifier.classes()));
    for (std::size_t b = 0; b < batch.size(); ++b) {
      std::copy(batch[b].target.begin(), batch[b].target.end(), targets.row(b).begin());
    }
    return batch_loss(classifier, trace.probabilities, targets);
  };
  return nn::gradient_check(loss, params, config.epsilon, config.samples, derive_seed(seed, 3));
}

std::vector<ArchitectureCheck> check_architectures(const GradcheckConfig& config) {
  EmbeddingTable table;
  table.dimension = config.embedding_dimension;
  {
    RandomSource rng(derive_seed(config.seed, 10));
    table.matrix = nn::Tensor::matrix(static_cast<std::size_t>(config.vocabulary),
                                      static_cast<std::size_t>(config.embedding_dimension));
    for (std::size_t i = table.matrix.cols(); i < table.matrix.size(); ++i) table.matrix[i] = rng.uniform(-0.5, 0.5);
  }
  std::vector<ArchitectureCheck> checks;
  std::uint64_t stream = 100;
  for (EncoderVariant variant : {EncoderVariant::Rnn, EncoderVariant::Cnn}) {
    for (Task task : {Task::L1, Task::L2, Task::L3}) {
      for (bool with_context : {false, true}) {
        ClassifierConfig c;
        c.task = task;
        c.encoder.variant = variant;
        c.encoder.filters = config.filters;
        c.encoder.rnn_hidden = config.hidden;
        c.encoder.windows = {1, 2, 3};
        c.reduction_units = config.reduction_units;
        c.dropout = config.dropout;
        if (with_context) {
          c.context.n_prev = 2;
          if (task == Task::L2) c.context.upper = {UpperContext{Level::L1, true, 1}};
          if (task == Task::L3) c.context.upper = {UpperContext{Level::L2, true, 0}, UpperContext{Level::L1, true, 0}};
        }
        c.name = std::string(to_string(variant)) + " " + std::string(to_string(task)) +
                 (with_context ? " + context" : " no context");
        ++stream;
        LevelClassifier classifier(c, table, inventory_width(task), derive_seed(config.seed, stream));
        ArchitectureCheck check;
        check.name = c.name;
        check.result = check_classifier(classifier, config, derive_seed(config.seed, 1000 + stream));
        check.passed = check.result.max_relative_error < config.tolerance;
        checks.push_back(std::move(check));
      }
    }
  }
  return checks;
}

}  // namespace diact::model
