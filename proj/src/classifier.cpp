#include "diact/classifier.hpp"

#include <algorithm>
#include <stdexcept>

#include "diact/error.hpp"

namespace diact::model {
namespace {

using nn::Activation;
using nn::Parameter;
using nn::Tensor;

}  // namespace

std::string_view to_string(EncoderVariant variant) { return variant == EncoderVariant::Cnn ? "cnn" : "rnn"; }

EncoderVariant parse_encoder_variant(std::string_view text) {
  if (text == "cnn" || text == "CNN") return EncoderVariant::Cnn;
  if (text == "rnn" || text == "RNN") return EncoderVariant::Rnn;
  throw DataError("unknown encoder variant '" + std::string(text) + "'");
}

int EncoderConfig::output_size() const {
  return variant == EncoderVariant::Cnn ? 3 * filters : rnn_layers * rnn_hidden;
}

void EncoderConfig::validate() const {
  if (variant == EncoderVariant::Rnn) {
    if (rnn_layers != kRnnLayers) {
      throw DataError("rnn encoder must have 5 layers, got " + std::to_string(rnn_layers));
    }
    if (rnn_hidden < 1) throw DataError("rnn hidden size must be positive");
    return;
  }
  if (filters < 1) throw DataError("cnn filter count must be positive");
  if (windows[0] < 1 || windows[0] >= windows[1] || windows[1] >= windows[2]) {
    throw DataError("cnn windows must be positive and strictly increasing");
  }
}

nlohmann::json EncoderConfig::to_json() const {
  return {{"variant", std::string(to_string(variant))}, {"layers", rnn_layers}, {"hidden", rnn_hidden},
          {"windows", windows}, {"filters", filters}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& json) {
  EncoderConfig config;
  try {
    config.variant = parse_encoder_variant(json.at("variant").get<std::string>());
    config.rnn_layers = json.value("layers", kRnnLayers);
    config.rnn_hidden = json.value("hidden", 100);
    if (json.contains("windows")) {
      const auto w = json.at("windows").get<std::vector<int>>();
      if (w.size() != 3) throw DataError("cnn windows must list exactly 3 sizes");
      std::copy(w.begin(), w.end(), config.windows.begin());
    }
    config.filters = json.value("filters", 100);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("encoder config: ") + e.what());
  }
  config.validate();
  return config;
}

void ClassifierConfig::validate() const {
  encoder.validate();
  validate_context(context, task);
  if (reduction_units < 1) throw DataError("reduction units must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw DataError("dropout must be in [0, 1)");
  if (reduction_activation == Activation::Softmax || reduction_activation == Activation::Sigmoid) {
    throw DataError("reduction activation must be linear or relu");
  }
}

nlohmann::json ClassifierConfig::to_json() const {
  return {{"name", name},
          {"task", std::string(to_string(task))},
          {"encoder", encoder.to_json()},
          {"context", context.to_json()},
          {"reduction", {{"units", reduction_units}, {"dropout", dropout},
                         {"activation", std::string(nn::to_string(reduction_activation))}}}};
}

ClassifierConfig ClassifierConfig::from_json(const nlohmann::json& json) {
  ClassifierConfig config;
  try {
    config.name = json.value("name", "");
    if (json.contains("task")) config.task = parse_task(json.at("task").get<std::string>());
    if (json.contains("encoder")) config.encoder = EncoderConfig::from_json(json.at("encoder"));
    if (json.contains("context")) config.context = ContextConfig::from_json(json.at("context"));
    if (json.contains("reduction")) {
      const auto& r = json.at("reduction");
      config.reduction_units = r.value("units", kReductionUnits);
      config.dropout = r.value("dropout", 0.5);
      config.reduction_activation = nn::parse_activation(r.value("activation", std::string("linear")));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("classifier config: ") + e.what());
  }
  config.validate();
  return config;
}

int inventory_width(Task task) {
  if (task == Task::Combined) throw std::invalid_argument("combined inventory width depends on training data");
  return label_block_width(task);
}

LevelClassifier::LevelClassifier(ClassifierConfig config, const EmbeddingTable& embeddings, int classes,
                                 std::uint64_t init_seed)
    : config_(std::move(config)), classes_(classes) {
  config_.validate();
  if (classes_ < 1) throw DataError("classifier needs at least one output class");
  if (config_.task != Task::Combined && classes_ != inventory_width(config_.task)) {
    throw DataError("head width " + std::to_string(classes_) + " does not match the " +
                    std::string(to_string(config_.task)) + " inventory");
  }
  if (embeddings.matrix.shape().size() != 2 || embeddings.rows() < 2 ||
      static_cast<int>(embeddings.matrix.cols()) != embeddings.dimension) {
    throw DataError("embedding table must be a [vocabulary x dimension] matrix");
  }
  context_size_ = context_width(config_.context, config_.task);
  embeddings_trainable_ = embeddings.trainable;
  embedding_ = Parameter("embedding", embeddings.matrix);

  RandomSource rng(init_seed);
  const auto dim = static_cast<std::size_t>(embeddings.dimension);
  const auto& enc = config_.encoder;
  if (enc.variant == EncoderVariant::Cnn) {
    const auto f = static_cast<std::size_t>(enc.filters);
    for (int k = 0; k < 3; ++k) {
      const auto w = static_cast<std::size_t>(enc.windows[static_cast<std::size_t>(k)]);
      const std::string prefix = "cnn" + std::to_string(w);
      Parameter filters(prefix + ".filters", Tensor({w, dim, f}));
      nn::glorot_uniform(filters.value, w * dim, f, rng);
      conv_filters_.push_back(std::move(filters));
      conv_biases_.emplace_back(prefix + ".bias", Tensor::vector(f));
    }
  } else {
    const auto h = static_cast<std::size_t>(enc.rnn_hidden);
    std::size_t input = dim;
    for (int layer = 0; layer < enc.rnn_layers; ++layer) {
      auto params = nn::make_gru("gru" + std::to_string(layer), input, h);
      nn::glorot_uniform(params.input_weights.value, input, 3 * h, rng);
      nn::glorot_uniform(params.recurrent_weights.value, h, 3 * h, rng);
      gru_.push_back(std::move(params));
      input = h;
    }
  }

  const auto features = static_cast<std::size_t>(representation_size() + context_size_);
  const auto units = static_cast<std::size_t>(config_.reduction_units);
  reduction_weights_ = Parameter("reduction.weights", Tensor::matrix(features, units));
  nn::glorot_uniform(reduction_weights_.value, features, units, rng);
  reduction_bias_ = Parameter("reduction.bias", Tensor::vector(units));
  const auto out = static_cast<std::size_t>(classes_);
  head_weights_ = Parameter("head.weights", Tensor::matrix(units, out));
  nn::glorot_uniform(head_weights_.value, units, out, rng);
  head_bias_ = Parameter("head.bias", Tensor::vector(out));
}

EncoderTrace LevelClassifier::encode(std::span<const int> tokens) const {
  if (tokens.empty()) throw DataError("cannot encode an empty segment");
  EncoderTrace trace;
  trace.tokens.assign(tokens.begin(), tokens.end());
  const auto& enc = config_.encoder;
  if (enc.variant == EncoderVariant::Cnn) {
    const auto widest = static_cast<std::size_t>(enc.windows[2]);
    if (trace.tokens.size() < widest) trace.tokens.resize(widest, Vocabulary::kPad);
  }
  const std::size_t dim = embedding_.value.cols();
  const auto vocab = static_cast<int>(embedding_.value.rows());
  trace.embedded = Tensor::matrix(trace.tokens.size(), dim);
  for (std::size_t t = 0; t < trace.tokens.size(); ++t) {
    const int token = trace.tokens[t];
    if (token < 0 || token >= vocab) throw DataError("token index " + std::to_string(token) + " outside vocabulary");
    if (token == Vocabulary::kPad) continue;  // PAD embeds as a constant zero row
    const auto source = embedding_.value.row(static_cast<std::size_t>(token));
    std::copy(source.begin(), source.end(), trace.embedded.row(t).begin());
  }

  trace.representation = Tensor::vector(static_cast<std::size_t>(representation_size()));
  double* out = trace.representation.data();
  if (enc.variant == EncoderVariant::Cnn) {
    for (std::size_t k = 0; k < conv_filters_.size(); ++k) {
      trace.conv_outputs.push_back(nn::conv1d_temporal(trace.embedded, conv_filters_[k], conv_biases_[k]));
      trace.pools.push_back(nn::max_over_time(trace.conv_outputs.back()));
      const auto& values = trace.pools.back().values;
      out = std::copy(values.data(), values.data() + values.size(), out);
    }
  } else {
    const Tensor* input = &trace.embedded;
    Tensor layer_output;
    for (const auto& params : gru_) {
      trace.gru.push_back(nn::gru_forward(*input, params));
      const auto last = trace.gru.back().hidden.row(trace.gru.back().length());
      out = std::copy(last.begin(), last.end(), out);
      layer_output = trace.gru.back().outputs();
      input = &layer_output;
    }
  }
  return trace;
}

BatchTrace LevelClassifier::forward(std::span<const ClassifierInput> batch, bool training, RandomSource* rng) const {
  if (batch.empty()) throw std::invalid_argument("forward: empty batch");
  if (training && config_.dropout > 0.0 && rng == nullptr) {
    throw std::invalid_argument("forward: training with dropout needs a random source");
  }
  const auto repr = static_cast<std::size_t>(representation_size());
  const auto width = repr + static_cast<std::size_t>(context_size_);
  BatchTrace trace;
  trace.features = Tensor::matrix(batch.size(), width);
  trace.encoders.reserve(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b].context.size() != static_cast<std::size_t>(context_size_)) {
      throw DataError("context vector has width " + std::to_string(batch[b].context.size()) + ", expected " +
                      std::to_string(context_size_));
    }
    trace.encoders.push_back(encode(batch[b].tokens));
    auto row = trace.features.row(b);
    const auto& rep = trace.encoders.back().representation;
    std::copy(rep.data(), rep.data() + repr, row.begin());
    std::copy(batch[b].context.begin(), batch[b].context.end(), row.begin() + static_cast<std::ptrdiff_t>(repr));
  }
  trace.features.check_finite("segment representation");

  trace.reduced = nn::dense_forward(trace.features, reduction_weights_, reduction_bias_, config_.reduction_activation);
  RandomSource unused(0);
  trace.dropped = nn::dropout(trace.reduced, config_.dropout, training, rng ? *rng : unused, &trace.dropout_mask);
  const Tensor logits = nn::dense_affine(trace.dropped, head_weights_, head_bias_);
  trace.probabilities = nn::activate(logits, single_label() ? Activation::Softmax : Activation::Sigmoid);
  trace.probabilities.check_finite("output head");
  return trace;
}

Tensor LevelClassifier::predict(std::span<const ClassifierInput> batch) const {
  return forward(batch, false, nullptr).probabilities;
}

std::vector<double> LevelClassifier::predict_one(std::span<const int> tokens, std::span<const double> context) const {
  const ClassifierInput input{tokens, context};
  const Tensor probs = predict(std::span<const ClassifierInput>(&input, 1));
  return {probs.data(), probs.data() + probs.size()};
}

void LevelClassifier::backward(const BatchTrace& trace, const Tensor& dlogits) {
  if (dlogits.rows() != trace.probabilities.rows() || dlogits.cols() != trace.probabilities.cols()) {
    throw std::invalid_argument("backward: logit gradient shape mismatch");
  }
  const Tensor ddropped = nn::dense_backward(trace.dropped, head_weights_, head_bias_, dlogits);
  const Tensor dreduced = nn::dropout_backward(trace.dropout_mask, ddropped);
  const Tensor dpre = nn::activation_backward(trace.reduced, dreduced, config_.reduction_activation);
  const Tensor dfeatures = nn::dense_backward(trace.features, reduction_weights_, reduction_bias_, dpre);
  const auto repr = static_cast<std::size_t>(representation_size());
  for (std::size_t b = 0; b < trace.encoders.size(); ++b) {
    backward_encoder(trace.encoders[b], dfeatures.row(b).first(repr));
  }
}

void LevelClassifier::backward_encoder(const EncoderTrace& trace, std::span<const double> drepresentation) {
  Tensor dembedded = Tensor::matrix(trace.embedded.rows(), trace.embedded.cols());
  if (config_.encoder.variant == EncoderVariant::Cnn) {
    const auto f = static_cast<std::size_t>(config_.encoder.filters);
    for (std::size_t k = 0; k < conv_filters_.size(); ++k) {
      Tensor dpool = Tensor::vector(f);
      std::copy_n(drepresentation.begin() + static_cast<std::ptrdiff_t>(k * f), f, dpool.data());
      const Tensor dconv = nn::max_over_time_backward(trace.pools[k], dpool);
      const Tensor dseq =
          nn::conv1d_backward(trace.embedded, conv_filters_[k], conv_biases_[k], trace.conv_outputs[k], dconv);
      for (std::size_t i = 0; i < dseq.size(); ++i) dembedded[i] += dseq[i];
    }
  } else {
    const auto h = static_cast<std::size_t>(config_.encoder.rnn_hidden);
    const std::size_t len = trace.embedded.rows();
    Tensor from_above;
    for (std::size_t layer = gru_.size(); layer-- > 0;) {
      Tensor doutputs = from_above.empty() ? Tensor::matrix(len, h) : std::move(from_above);
      auto last = doutputs.row(len - 1);
      for (std::size_t j = 0; j < h; ++j) last[j] += drepresentation[layer * h + j];
      from_above = nn::gru_backward(trace.gru[layer], gru_[layer], doutputs);
    }
    dembedded = std::move(from_above);
  }
  if (!embeddings_trainable_) return;
  for (std::size_t t = 0; t < trace.tokens.size(); ++t) {
    const int token = trace.tokens[t];
    if (token == Vocabulary::kPad) continue;
    auto grad = embedding_.gradient.row(static_cast<std::size_t>(token));
    const auto d = dembedded.row(t);
    for (std::size_t j = 0; j < grad.size(); ++j) grad[j] += d[j];
  }
}

std::vector<Parameter*> LevelClassifier::trainable_parameters() {
  auto params = all_parameters();
  if (!embeddings_trainable_) params.erase(params.begin());
  return params;
}

std::vector<Parameter*> LevelClassifier::all_parameters() {
  std::vector<Parameter*> params{&embedding_};
  for (std::size_t k = 0; k < conv_filters_.size(); ++k) {
    params.push_back(&conv_filters_[k]);
    params.push_back(&conv_biases_[k]);
  }
  for (auto& g : gru_) {
    params.push_back(&g.input_weights);
    params.push_back(&g.recurrent_weights);
    params.push_back(&g.bias);
  }
  for (Parameter* p : {&reduction_weights_, &reduction_bias_, &head_weights_, &head_bias_}) params.push_back(p);
  return params;
}

std::vector<const Parameter*> LevelClassifier::all_parameters() const {
  auto mutable_params = const_cast<LevelClassifier*>(this)->all_parameters();
  return {mutable_params.begin(), mutable_params.end()};
}

int predict_single(std::span<const double> probabilities) {
  if (probabilities.empty()) throw std::invalid_argument("predict_single: empty probability vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < probabilities.size(); ++i) {
    if (probabilities[i] > probabilities[best]) best = i;
  }
  return static_cast<int>(best);
}

std::vector<int> predict_multi(std::span<const double> probabilities, double threshold) {
  std::vector<int> labels;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    if (probabilities[i] >= threshold) labels.push_back(static_cast<int>(i));
  }
  return labels;
}

}  // namespace diact::model
