#include "diact/pipeline.hpp"

#include <algorithm>
#include <tuple>

#include "diact/error.hpp"

namespace diact::model {

std::vector<int> segment_tokens(const Segment& segment, const Vocabulary& vocab, int max_len) {
  if (tokenize(segment.text).empty()) return {Vocabulary::kUnk};
  return encode(segment, vocab, max_len).indices;
}

bool annotation_less(const Annotation& a, const Annotation& b) {
  return std::tie(a.l1, a.l2, a.l3) < std::tie(b.l1, b.l2, b.l3);
}

CombinedInventory::CombinedInventory(int levels, std::vector<Annotation> classes)
    : levels_(levels), classes_(std::move(classes)) {
  if (levels_ != 2 && levels_ != 3) throw DataError("combined inventory covers 2 or 3 levels");
  for (auto& c : classes_) c = project(c);
  std::sort(classes_.begin(), classes_.end(), annotation_less);
  classes_.erase(std::unique(classes_.begin(), classes_.end()), classes_.end());
}

Annotation CombinedInventory::project(const Annotation& labels) const {
  Annotation out = labels;
  if (levels_ == 2) out.l3.clear();
  return out;
}

int CombinedInventory::index_of(const Annotation& labels) const {
  const Annotation key = project(labels);
  const auto it = std::lower_bound(classes_.begin(), classes_.end(), key, annotation_less);
  if (it == classes_.end() || !(*it == key)) return -1;
  return static_cast<int>(it - classes_.begin());
}

nlohmann::json CombinedInventory::to_json() const {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : classes_) classes.push_back({c.l1, c.l2, c.l3});
  return {{"levels", levels_}, {"classes", classes}};
}

CombinedInventory CombinedInventory::from_json(const nlohmann::json& json) {
  try {
    std::vector<Annotation> classes;
    for (const auto& c : json.at("classes")) {
      classes.push_back(Annotation{c.at(0).get<int>(), c.at(1).get<std::vector<int>>(), c.at(2).get<std::vector<int>>()});
    }
    return CombinedInventory(json.at("levels").get<int>(), std::move(classes));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("combined inventory: ") + e.what());
  }
}

CombinedInventory build_combined_inventory(std::span<const Dialog* const> dialogs, int levels) {
  std::vector<Annotation> seen;
  for (const Dialog* d : dialogs) {
    for (const auto& s : d->segments) seen.push_back(s.labels);
  }
  if (seen.empty()) throw DataError("combined inventory needs at least one training segment");
  return CombinedInventory(levels, std::move(seen));
}

ExampleSet build_examples(std::span<const Dialog* const> dialogs, const ClassifierConfig& config,
                          const Vocabulary& vocab, int max_len, const CombinedInventory* inventory) {
  const auto& space = LabelSpace::canonical();
  const Task task = config.task;
  if (task == Task::Combined && inventory == nullptr) throw DataError("combined examples need an inventory");
  const int classes = task == Task::Combined ? inventory->size() : inventory_width(task);
  ExampleSet set;
  for (const Dialog* dialog : dialogs) {
    const auto labels = dialog->annotations();
    for (std::size_t p = 0; p < dialog->segments.size(); ++p) {
      const Segment& segment = dialog->segments[p];
      if ((task == Task::L2 || task == Task::L3) && space.is_gate(segment.labels.l1)) continue;
      Example e;
      e.tokens = segment_tokens(segment, vocab, max_len);
      e.context = encode_context(labels, p, config.context, task);
      e.target.assign(static_cast<std::size_t>(classes), 0.0);
      switch (task) {
        case Task::L1: e.target[static_cast<std::size_t>(segment.labels.l1)] = 1.0; break;
        case Task::L2:
        case Task::L3:
          for (int index : segment.labels.set(task == Task::L2 ? Level::L2 : Level::L3)) {
            e.target[static_cast<std::size_t>(index)] = 1.0;
          }
          break;
        case Task::Combined: {
          const int index = inventory->index_of(segment.labels);
          if (index < 0) {
            throw DataError("segment " + dialog->id + "#" + std::to_string(p) +
                            " has a label combination outside the inventory");
          }
          e.target[static_cast<std::size_t>(index)] = 1.0;
          break;
        }
      }
      set.examples.push_back(std::move(e));
      set.sources.push_back(&segment);
    }
  }
  return set;
}

std::vector<SegmentPrediction> hierarchical_predict(const HierarchicalPipeline& pipeline, const Dialog& dialog,
                                                    const Vocabulary& vocab, int max_len, ContextSource source,
                                                    double threshold) {
  if (!pipeline.l1 || !pipeline.l2 || !pipeline.l3) throw RuntimeFailure("hierarchical pipeline is missing a level");
  if (pipeline.l1->task() != Task::L1 || pipeline.l2->task() != Task::L2 || pipeline.l3->task() != Task::L3) {
    throw RuntimeFailure("hierarchical pipeline levels are out of order");
  }
  const auto& space = LabelSpace::canonical();
  const auto gold = dialog.annotations();
  std::vector<Annotation> predicted(gold.size());
  const std::vector<Annotation>& context_labels = source == ContextSource::Gold ? gold : predicted;

  std::vector<SegmentPrediction> out;
  out.reserve(gold.size());
  for (std::size_t p = 0; p < dialog.segments.size(); ++p) {
    const auto tokens = segment_tokens(dialog.segments[p], vocab, max_len);
    SegmentPrediction prediction;
    prediction.l1_probabilities =
        pipeline.l1->predict_one(tokens, encode_context(context_labels, p, pipeline.l1->config().context, Task::L1));
    prediction.labels.l1 = predict_single(prediction.l1_probabilities);
    predicted[p].l1 = prediction.labels.l1;
    if (!space.is_gate(prediction.labels.l1)) {
      prediction.l2_probabilities = pipeline.l2->predict_one(
          tokens, encode_context(context_labels, p, pipeline.l2->config().context, Task::L2));
      prediction.labels.l2 = predict_multi(prediction.l2_probabilities, threshold);
      predicted[p].l2 = prediction.labels.l2;
      prediction.l3_probabilities = pipeline.l3->predict_one(
          tokens, encode_context(context_labels, p, pipeline.l3->config().context, Task::L3));
      prediction.labels.l3 = predict_multi(prediction.l3_probabilities, threshold);
      predicted[p].l3 = prediction.labels.l3;
    }
    out.push_back(std::move(prediction));
  }
  return out;
}

std::vector<SegmentPrediction> combined_predict(const LevelClassifier& classifier, const CombinedInventory& inventory,
                                                const Dialog& dialog, const Vocabulary& vocab, int max_len) {
  if (classifier.task() != Task::Combined || classifier.classes() != inventory.size()) {
    throw RuntimeFailure("classifier does not match the combined inventory");
  }
  const auto gold = dialog.annotations();
  std::vector<SegmentPrediction> out;
  out.reserve(gold.size());
  for (std::size_t p = 0; p < dialog.segments.size(); ++p) {
    const auto tokens = segment_tokens(dialog.segments[p], vocab, max_len);
    SegmentPrediction prediction;
    prediction.l1_probabilities =
        classifier.predict_one(tokens, encode_context(gold, p, classifier.config().context, Task::Combined));
    prediction.labels = inventory.at(predict_single(prediction.l1_probabilities));
    out.push_back(std::move(prediction));
  }
  return out;
}

ClassifierConfig default_l1_config() {
  ClassifierConfig config;
  config.name = "L1 CNN {3,4,5} + 3 previous";
  config.task = Task::L1;
  config.encoder.windows = {3, 4, 5};
  config.context.n_prev = 3;
  return config;
}

ClassifierConfig default_l2_config() {
  ClassifierConfig config;
  config.name = "L2 CNN {1,2,3} + 3 previous + L1 current/previous";
  config.task = Task::L2;
  config.encoder.windows = {1, 2, 3};
  config.context.n_prev = 3;
  config.context.upper = {UpperContext{Level::L1, true, 1}};
  return config;
}

ClassifierConfig default_l3_config() {
  ClassifierConfig config;
  config.name = "L3 CNN {1,2,3} + L2 current";
  config.task = Task::L3;
  config.encoder.windows = {1, 2, 3};
  config.context.upper = {UpperContext{Level::L2, true, 0}};
  return config;
}

ClassifierConfig default_combined_config() {
  ClassifierConfig config = default_l1_config();
  config.name = "combined CNN {3,4,5} + 3 previous";
  config.task = Task::Combined;
  return config;
}

}  // namespace diact::model
