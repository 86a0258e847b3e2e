#pragma once

#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "diact/classifier.hpp"
#include "diact/training.hpp"

namespace diact::model {

// Token indices used for a segment. A segment whose text is nothing but
// punctuation maps to a single UNK token instead of failing.
std::vector<int> segment_tokens(const Segment& segment, const Vocabulary& vocab, int max_len);

// Whole-annotation classes for the single-label baseline, in ascending
// (L1, L2, L3) order. With levels = 2 the L3 set is dropped from every class.
class CombinedInventory {
 public:
  CombinedInventory() = default;
  CombinedInventory(int levels, std::vector<Annotation> classes);

  int levels() const { return levels_; }
  int size() const { return static_cast<int>(classes_.size()); }
  const std::vector<Annotation>& classes() const { return classes_; }
  const Annotation& at(int index) const { return classes_.at(static_cast<std::size_t>(index)); }
  Annotation project(const Annotation& labels) const;
  int index_of(const Annotation& labels) const;  // -1 for combinations never seen

  nlohmann::json to_json() const;
  static CombinedInventory from_json(const nlohmann::json& json);

 private:
  int levels_ = 3;
  std::vector<Annotation> classes_;
};

bool annotation_less(const Annotation& a, const Annotation& b);

CombinedInventory build_combined_inventory(std::span<const Dialog* const> dialogs, int levels);

// Examples for one task. L2/L3 skip segments whose gold L1 label is a gate
// label. Combined targets index into `inventory`, which must cover every
// segment. Label context always comes from gold annotations.
struct ExampleSet {
  std::vector<Example> examples;
  std::vector<const Segment*> sources;
};

ExampleSet build_examples(std::span<const Dialog* const> dialogs, const ClassifierConfig& config,
                          const Vocabulary& vocab, int max_len, const CombinedInventory* inventory = nullptr);

enum class ContextSource { Gold, Predicted };

struct SegmentPrediction {
  Annotation labels;
  std::vector<double> l1_probabilities;
  std::vector<double> l2_probabilities;  // empty when the L1 gate fired
  std::vector<double> l3_probabilities;
};

struct HierarchicalPipeline {
  std::shared_ptr<const LevelClassifier> l1;
  std::shared_ptr<const LevelClassifier> l2;
  std::shared_ptr<const LevelClassifier> l3;
};

// Predicts L1 for each segment in order; a gate label forces Nil at L2 and
// L3, otherwise L2 and then L3 are predicted with their configured context.
// Gold context uses the manual annotations; predicted context uses the
// pipeline's own earlier outputs.
std::vector<SegmentPrediction> hierarchical_predict(const HierarchicalPipeline& pipeline, const Dialog& dialog,
                                                    const Vocabulary& vocab, int max_len,
                                                    ContextSource source = ContextSource::Gold,
                                                    double threshold = 0.5);

std::vector<SegmentPrediction> combined_predict(const LevelClassifier& classifier, const CombinedInventory& inventory,
                                                const Dialog& dialog, const Vocabulary& vocab, int max_len);

// Best-performing configurations used as pipeline defaults.
ClassifierConfig default_l1_config();
ClassifierConfig default_l2_config();
ClassifierConfig default_l3_config();
ClassifierConfig default_combined_config();

}  // namespace diact::model
