#pragma once

#include <filesystem>
#include <memory>
#include <optional>

#include <nlohmann/json.hpp>

#include "diact/pipeline.hpp"

namespace diact::model {

struct Checkpoint {
  std::shared_ptr<LevelClassifier> classifier;
  Vocabulary vocabulary;
  int max_len = kDefaultMaxLen;
  std::optional<CombinedInventory> inventory;
  nlohmann::json extra = nlohmann::json::object();
};

// Writes `<stem>.json` (configuration, vocabulary, parameter names, shapes
// and offsets) and `<stem>.bin` (every parameter value as a little-endian
// IEEE double, in manifest order). Loading restores values bit for bit.
void save_checkpoint(const std::filesystem::path& stem, const LevelClassifier& classifier, const Vocabulary& vocab,
                     int max_len, const CombinedInventory* inventory = nullptr,
                     const nlohmann::json& extra = nlohmann::json::object());
Checkpoint load_checkpoint(const std::filesystem::path& stem);

std::filesystem::path manifest_path(const std::filesystem::path& stem);
std::filesystem::path blob_path(const std::filesystem::path& stem);

}  // namespace diact::model
