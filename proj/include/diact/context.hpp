#pragma once

#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "diact/corpus.hpp"

namespace diact::model {

// What a classifier predicts. Combined is the single-label baseline over
// whole (L1, L2, L3) annotations.
enum class Task { L1, L2, L3, Combined };

std::string_view to_string(Task task);
Task parse_task(std::string_view text);
Task task_for(Level level);
bool is_single_label(Task task);

// Label-context block taken from a level above the classifier's own.
struct UpperContext {
  Level level = Level::L1;
  bool current = false;  // the segment being classified
  int n_prev = 0;        // nearest preceding segments

  friend bool operator==(const UpperContext&, const UpperContext&) = default;
};

struct ContextConfig {
  int n_prev = 0;  // preceding segments at the classifier's own level, 0..3
  std::vector<UpperContext> upper;

  nlohmann::json to_json() const;
  static ContextConfig from_json(const nlohmann::json& json);
  friend bool operator==(const ContextConfig&, const ContextConfig&) = default;
};

inline constexpr int kMaxContextSegments = 3;

// One-hot width of L1, multi-hot width of L2/L3 (Nil = all zeros), and the
// concatenation of the three for Combined.
int label_block_width(Level level);
int label_block_width(Task task);

// Throws DataError when a source is not strictly above the classifier level
// or a segment count is outside 0..3.
void validate_context(const ContextConfig& config, Task task);
int context_width(const ContextConfig& config, Task task);

// Block order: own-level blocks for positions p-1, p-2, ..., p-n_prev; then
// each upper source in configuration order, its current-segment block first
// (when enabled) followed by its preceding blocks, nearest first. Positions
// before the start of the dialog contribute all-zero blocks.
std::vector<double> encode_context(std::span<const Annotation> labels, std::size_t position,
                                   const ContextConfig& config, Task task);
std::vector<double> encode_context(const Dialog& dialog, std::size_t position, const ContextConfig& config,
                                   Task task);

}  // namespace diact::model
