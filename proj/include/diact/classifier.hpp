#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "diact/context.hpp"
#include "diact/layers.hpp"
#include "diact/text.hpp"

namespace diact::model {

enum class EncoderVariant { Rnn, Cnn };

std::string_view to_string(EncoderVariant variant);
EncoderVariant parse_encoder_variant(std::string_view text);

inline constexpr int kRnnLayers = 5;
inline constexpr int kReductionUnits = 100;

struct EncoderConfig {
  EncoderVariant variant = EncoderVariant::Cnn;
  int rnn_layers = kRnnLayers;
  int rnn_hidden = 100;
  std::array<int, 3> windows{3, 4, 5};
  int filters = 100;

  int output_size() const;
  void validate() const;  // throws DataError
  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& json);
  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

struct ClassifierConfig {
  std::string name;
  Task task = Task::L1;
  EncoderConfig encoder;
  ContextConfig context;
  int reduction_units = kReductionUnits;
  double dropout = 0.5;
  nn::Activation reduction_activation = nn::Activation::Linear;

  void validate() const;
  nlohmann::json to_json() const;
  static ClassifierConfig from_json(const nlohmann::json& json);
  friend bool operator==(const ClassifierConfig&, const ClassifierConfig&) = default;
};

// Head width for the per-level tasks; Combined depends on the inventory.
int inventory_width(Task task);

struct ClassifierInput {
  std::span<const int> tokens;
  std::span<const double> context;
};

// Activations of one segment encoder, kept for the backward pass.
struct EncoderTrace {
  std::vector<int> tokens;  // after PAD extension
  nn::Tensor embedded;      // [len x dim]
  std::vector<nn::Tensor> conv_outputs;
  std::vector<nn::MaxPool> pools;
  std::vector<nn::GruTrace> gru;
  nn::Tensor representation;  // [encoder output size]
};

struct BatchTrace {
  std::vector<EncoderTrace> encoders;
  nn::Tensor features;       // [batch x (repr + context)]
  nn::Tensor reduced;        // post-activation, pre-dropout
  nn::Tensor dropout_mask;   // all ones at inference
  nn::Tensor dropped;
  nn::Tensor probabilities;  // [batch x classes]
};

// Segment encoder (CNN or 5-layer GRU stack) whose representation is
// concatenated with the label context, reduced by a dense layer with dropout
// and mapped to a softmax (single-label) or sigmoid (multi-label) head.
class LevelClassifier {
 public:
  LevelClassifier(ClassifierConfig config, const EmbeddingTable& embeddings, int classes, std::uint64_t init_seed);

  const ClassifierConfig& config() const { return config_; }
  Task task() const { return config_.task; }
  bool single_label() const { return is_single_label(config_.task); }
  int classes() const { return classes_; }
  int context_size() const { return context_size_; }
  int representation_size() const { return config_.encoder.output_size(); }
  bool embeddings_trainable() const { return embeddings_trainable_; }

  EncoderTrace encode(std::span<const int> tokens) const;
  BatchTrace forward(std::span<const ClassifierInput> batch, bool training, RandomSource* rng) const;
  // Inference probabilities, one row per input.
  nn::Tensor predict(std::span<const ClassifierInput> batch) const;
  std::vector<double> predict_one(std::span<const int> tokens, std::span<const double> context) const;

  // Accumulates gradients given d loss / d head logits.
  void backward(const BatchTrace& trace, const nn::Tensor& dlogits);

  // Parameters updated by training; the embedding matrix only when trainable.
  std::vector<nn::Parameter*> trainable_parameters();
  // Every parameter, embedding matrix first, in a stable order.
  std::vector<nn::Parameter*> all_parameters();
  std::vector<const nn::Parameter*> all_parameters() const;

 private:
  void backward_encoder(const EncoderTrace& trace, std::span<const double> drepresentation);

  ClassifierConfig config_;
  int classes_ = 0;
  int context_size_ = 0;
  bool embeddings_trainable_ = true;
  nn::Parameter embedding_;
  std::vector<nn::Parameter> conv_filters_;
  std::vector<nn::Parameter> conv_biases_;
  std::vector<nn::GruParams> gru_;
  nn::Parameter reduction_weights_;
  nn::Parameter reduction_bias_;
  nn::Parameter head_weights_;
  nn::Parameter head_bias_;
};

// Argmax with ties resolved to the lowest index.
int predict_single(std::span<const double> probabilities);
// Indices with p >= threshold, ascending; empty means Nil.
std::vector<int> predict_multi(std::span<const double> probabilities, double threshold = 0.5);

}  // namespace diact::model
