#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "diact/classifier.hpp"
#include "diact/optim.hpp"

namespace diact::model {

// Small dimensions keep finite differences fast; the topology (5 GRU layers,
// 3 CNN windows, reduction, head) matches the full-size classifiers.
struct GradcheckConfig {
  int vocabulary = 12;
  int embedding_dimension = 6;
  int filters = 4;
  int hidden = 3;
  int reduction_units = 5;
  double dropout = 0.5;
  double value_scale = 0.6;  // parameters are redrawn uniform in +-value_scale
  int batch = 3;
  int max_length = 7;
  std::size_t samples = 400;
  double epsilon = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
  bool include_embeddings = true;

  static GradcheckConfig from_json(const nlohmann::json& json);
  nlohmann::json to_json() const;
};

struct ArchitectureCheck {
  std::string name;
  nn::GradientCheckResult result;
  bool passed = false;
};

// End-to-end check (encoder, context, reduction with dropout, head, loss) of
// RNN and CNN encoders under L1, L2 and L3 heads, each without and with
// label-context blocks.
std::vector<ArchitectureCheck> check_architectures(const GradcheckConfig& config);

// Checks one assembled classifier on a seeded random batch.
nn::GradientCheckResult check_classifier(LevelClassifier& classifier, const GradcheckConfig& config,
                                         std::uint64_t seed);

}  // namespace diact::model
