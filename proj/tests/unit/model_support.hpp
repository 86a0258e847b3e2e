#pragma once

#include <map>
#include <string>

#include "diact/classifier.hpp"
#include "diact/random.hpp"

namespace diact::testing {

// Small random embedding table; row 0 (PAD) stays zero.
inline EmbeddingTable small_embeddings(int vocabulary, int dimension, std::uint64_t seed) {
  EmbeddingTable table;
  table.dimension = dimension;
  table.matrix = nn::Tensor::matrix(static_cast<std::size_t>(vocabulary), static_cast<std::size_t>(dimension));
  RandomSource rng(seed);
  for (std::size_t i = table.matrix.cols(); i < table.matrix.size(); ++i) table.matrix[i] = rng.uniform(-0.5, 0.5);
  return table;
}

inline model::ClassifierConfig small_config(model::Task task, model::EncoderVariant variant,
                                            std::array<int, 3> windows = {1, 2, 3}) {
  model::ClassifierConfig c;
  c.task = task;
  c.encoder.variant = variant;
  c.encoder.windows = windows;
  c.encoder.filters = 6;
  c.encoder.rnn_hidden = 4;
  c.reduction_units = 8;
  return c;
}

inline std::map<std::string, nn::Parameter*> parameters_by_name(model::LevelClassifier& classifier) {
  std::map<std::string, nn::Parameter*> out;
  for (auto* p : classifier.all_parameters()) out[p->name] = p;
  return out;
}

}  // namespace diact::testing
