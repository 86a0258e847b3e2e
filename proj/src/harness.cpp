#include "diact/harness.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "diact/error.hpp"

namespace diact::harness {
namespace {

using model::ClassifierConfig;
using model::SegmentPrediction;
using model::Task;

constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kEmbeddingStream = 2;
constexpr std::uint64_t kInitStream = 3;
constexpr std::uint64_t kTrainStream = 4;

template <typename T>
T field_or(const nlohmann::json& json, const char* key, T fallback) {
  return json.contains(key) && !json.at(key).is_null() ? json.at(key).get<T>() : fallback;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::filesystem::path& path) {
  if (path.empty() || path.is_absolute() || base.empty()) return path;
  return base / path;
}

ClassifierConfig classifier_for(const nlohmann::json& json, Task task) {
  nlohmann::json copy = json;
  copy["task"] = std::string(model::to_string(task));
  return ClassifierConfig::from_json(copy);
}

std::vector<const Dialog*> dialogs_by_id(const Corpus& corpus, const std::vector<std::string>& ids) {
  std::set<std::string> wanted(ids.begin(), ids.end());
  std::vector<const Dialog*> out;
  for (const auto& d : corpus.dialogs) {
    if (wanted.count(d.id)) out.push_back(&d);
  }
  return out;
}

struct TrainedModel {
  std::shared_ptr<model::LevelClassifier> classifier;
  model::TrainingHistory history;
};

TrainedModel train_model(const CellContext& context, const ClassifierConfig& config, std::uint64_t stream,
                         const model::CombinedInventory* inventory = nullptr) {
  const auto& spec = context.spec;
  const int max_len = spec.embedding.max_len;
  const auto train_set = model::build_examples(context.train, config, context.vocabulary, max_len, inventory);
  auto val_set = model::build_examples(context.validation, config, context.vocabulary, max_len, inventory);
  if (train_set.examples.empty()) throw DataError("no training examples for " + std::string(model::to_string(config.task)));
  if (val_set.examples.empty()) throw DataError("no validation examples for " + std::string(model::to_string(config.task)));

  EmbeddingTable embeddings;
  if (context.pretrained) {
    embeddings = *context.pretrained;
  } else {
    embeddings = random_embeddings(context.vocabulary, spec.embedding.dimension,
                                   derive_seed(context.seed, kEmbeddingStream));
  }
  embeddings.trainable = spec.embedding.trainable;
  const int classes = config.task == Task::Combined ? inventory->size() : model::inventory_width(config.task);
  TrainedModel trained;
  trained.classifier = std::make_shared<model::LevelClassifier>(
      config, embeddings, classes, derive_seed(derive_seed(context.seed, kInitStream), stream));
  auto training = spec.training;
  training.seed = derive_seed(derive_seed(context.seed, kTrainStream), stream);
  training.threshold = spec.threshold;
  trained.history = model::train(*trained.classifier, train_set.examples, val_set.examples, training);
  return trained;
}

nlohmann::json history_json(Task task, const model::TrainingHistory& history) {
  return {{"task", std::string(model::to_string(task))},
          {"best_epoch", history.best_epoch},
          {"stopped_epoch", history.stopped_epoch()},
          {"best_validation", history.best_metric}};
}

std::vector<SegmentPrediction> predict_level(const model::LevelClassifier& classifier, const CellContext& context) {
  const auto& space = LabelSpace::canonical();
  std::vector<SegmentPrediction> out;
  for (const Dialog* dialog : context.evaluation) {
    const auto gold = dialog->annotations();
    for (std::size_t p = 0; p < dialog->segments.size(); ++p) {
      SegmentPrediction prediction;
      const auto& segment = dialog->segments[p];
      if (classifier.task() != Task::L1 && space.is_gate(segment.labels.l1)) {
        out.push_back(std::move(prediction));
        continue;
      }
      const auto tokens = model::segment_tokens(segment, context.vocabulary, context.spec.embedding.max_len);
      const auto probs =
          classifier.predict_one(tokens, model::encode_context(gold, p, classifier.config().context, classifier.task()));
      switch (classifier.task()) {
        case Task::L1:
          prediction.labels.l1 = model::predict_single(probs);
          prediction.l1_probabilities = probs;
          break;
        case Task::L2:
          prediction.labels.l1 = segment.labels.l1;
          prediction.labels.l2 = model::predict_multi(probs, context.spec.threshold);
          prediction.l2_probabilities = probs;
          break;
        case Task::L3:
          prediction.labels.l1 = segment.labels.l1;
          prediction.labels.l3 = model::predict_multi(probs, context.spec.threshold);
          prediction.l3_probabilities = probs;
          break;
        case Task::Combined:
          break;
      }
      out.push_back(std::move(prediction));
    }
  }
  return out;
}

std::string combined_stream(int levels) { return levels == 2 ? "L1+L2" : "L1+L2+L3"; }

std::vector<View> views_for(Mode mode, const ExperimentSpec& spec) {
  switch (mode) {
    case Mode::L1: return {View::L1};
    case Mode::L2: return {View::L2};
    case Mode::L3: return {View::L3};
    case Mode::Hierarchical: return {View::L1, View::L2, View::L3, View::L1L2, View::L1L2L3};
    case Mode::Combined: {
      std::vector<View> views;
      for (int levels : spec.combined_levels) views.push_back(levels == 2 ? View::L1L2 : View::L1L2L3);
      return views;
    }
  }
  return {};
}

std::string stream_for(Mode mode, View view) {
  if (mode == Mode::Combined) return view == View::L1L2 ? "L1+L2" : "L1+L2+L3";
  return "main";
}

bool evaluated(Mode mode, const Segment& segment) {
  if (mode == Mode::L2 || mode == Mode::L3) return !LabelSpace::canonical().is_gate(segment.labels.l1);
  return true;
}

}  // namespace

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::L1: return "L1";
    case Mode::L2: return "L2";
    case Mode::L3: return "L3";
    case Mode::Hierarchical: return "hierarchical";
    case Mode::Combined: return "combined";
  }
  return "?";
}

Mode parse_mode(std::string_view text) {
  if (text == "L1" || text == "l1") return Mode::L1;
  if (text == "L2" || text == "l2") return Mode::L2;
  if (text == "L3" || text == "l3") return Mode::L3;
  if (text == "hierarchical") return Mode::Hierarchical;
  if (text == "combined") return Mode::Combined;
  throw DataError("unknown experiment mode '" + std::string(text) + "'");
}

std::uint64_t default_seed() {
  const char* value = std::getenv("DIACT_SEED");
  if (value == nullptr || *value == '\0') return 0;
  char* end = nullptr;
  const unsigned long long seed = std::strtoull(value, &end, 10);
  if (end == nullptr || *end != '\0') throw DataError("DIACT_SEED must be a non-negative integer");
  return seed;
}

std::string describe(const model::ContextConfig& context) {
  std::string text = "prev=" + std::to_string(context.n_prev);
  for (const auto& source : context.upper) {
    text += " ";
    text += diact::to_string(source.level);
    text += "[";
    if (source.current) text += "cur";
    if (source.current && source.n_prev > 0) text += ",";
    if (source.n_prev > 0) text += "prev=" + std::to_string(source.n_prev);
    text += "]";
  }
  return text;
}

ExperimentSpec ExperimentSpec::from_json(const nlohmann::json& json, const std::filesystem::path& base_dir) {
  if (!json.is_object()) throw DataError("experiment spec must be a JSON object");
  static const std::set<std::string> known{"name",     "corpus",  "mode",    "configurations", "context_sweep",
                                           "pipeline", "combined", "embedding", "training",     "folds",
                                           "runs",     "base_seed", "context_source", "threshold"};
  for (const auto& [key, value] : json.items()) {
    if (!known.count(key)) throw DataError("experiment spec: unknown field '" + key + "'");
  }
  ExperimentSpec spec;
  try {
    spec.name = field_or<std::string>(json, "name", "experiment");
    spec.mode = parse_mode(json.at("mode").get<std::string>());

    const auto& corpus = json.at("corpus");
    if (corpus.contains("synthetic")) {
      spec.corpus.synthetic = SyntheticConfig::from_json(corpus.at("synthetic"));
      spec.corpus.synthetic_seed = field_or<std::uint64_t>(corpus, "seed", default_seed());
    } else {
      spec.corpus.path = resolve(base_dir, corpus.at("path").get<std::string>());
      spec.corpus.format = parse_corpus_format(field_or<std::string>(corpus, "format", "json"));
    }

    const bool per_level = spec.mode == Mode::L1 || spec.mode == Mode::L2 || spec.mode == Mode::L3;
    if (per_level) {
      const Task task = model::task_for(parse_level(to_string(spec.mode)));
      std::vector<ClassifierConfig> base;
      if (json.contains("configurations")) {
        for (const auto& c : json.at("configurations")) base.push_back(classifier_for(c, task));
      } else {
        base.push_back(task == Task::L1   ? model::default_l1_config()
                       : task == Task::L2 ? model::default_l2_config()
                                          : model::default_l3_config());
      }
      if (json.contains("context_sweep")) {
        for (const auto& config : base) {
          for (const auto& c : json.at("context_sweep")) {
            ClassifierConfig swept = config;
            swept.context = model::ContextConfig::from_json(c);
            swept.name = (config.name.empty() ? std::string(to_string(task)) : config.name) + " / " +
                         describe(swept.context);
            swept.validate();
            spec.configurations.push_back(std::move(swept));
          }
        }
      } else {
        spec.configurations = std::move(base);
      }
      for (std::size_t i = 0; i < spec.configurations.size(); ++i) {
        if (spec.configurations[i].name.empty()) spec.configurations[i].name = "config " + std::to_string(i);
      }
    }
    if (json.contains("pipeline")) {
      const auto& p = json.at("pipeline");
      if (p.contains("l1")) spec.l1 = classifier_for(p.at("l1"), Task::L1);
      if (p.contains("l2")) spec.l2 = classifier_for(p.at("l2"), Task::L2);
      if (p.contains("l3")) spec.l3 = classifier_for(p.at("l3"), Task::L3);
    }
    if (json.contains("combined")) {
      const auto& c = json.at("combined");
      if (c.contains("classifier")) spec.combined = classifier_for(c.at("classifier"), Task::Combined);
      if (c.contains("levels")) spec.combined_levels = c.at("levels").get<std::vector<int>>();
    }
    if (json.contains("embedding")) {
      const auto& e = json.at("embedding");
      spec.embedding.dimension = field_or(e, "dimension", spec.embedding.dimension);
      const auto pretrained = field_or<std::string>(e, "pretrained", "");
      if (!pretrained.empty()) spec.embedding.pretrained = resolve(base_dir, pretrained);
      spec.embedding.trainable = field_or(e, "trainable", spec.embedding.trainable);
      spec.embedding.min_count = field_or(e, "min_count", spec.embedding.min_count);
      spec.embedding.max_len = field_or(e, "max_len", spec.embedding.max_len);
    }
    if (json.contains("training")) spec.training = model::TrainingConfig::from_json(json.at("training"));
    if (json.contains("folds")) {
      const auto& f = json.at("folds");
      spec.folds = field_or(f, "k", spec.folds);
      spec.fold_seed = field_or<std::uint64_t>(f, "seed", default_seed());
      spec.evaluate_folds = field_or<std::vector<int>>(f, "evaluate", {});
    } else {
      spec.fold_seed = default_seed();
    }
    spec.runs = field_or(json, "runs", spec.runs);
    spec.base_seed = field_or<std::uint64_t>(json, "base_seed", default_seed());
    const auto source = field_or<std::string>(json, "context_source", "gold");
    if (source == "gold") spec.context_source = model::ContextSource::Gold;
    else if (source == "predicted") spec.context_source = model::ContextSource::Predicted;
    else throw DataError("context_source must be 'gold' or 'predicted'");
    spec.threshold = field_or(json, "threshold", spec.threshold);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("experiment spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

ExperimentSpec ExperimentSpec::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open experiment spec " + path.string());
  nlohmann::json json;
  try {
    json = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("experiment spec " + path.string() + ": " + e.what());
  }
  return from_json(json, path.parent_path());
}

void ExperimentSpec::validate() const {
  if (runs < 1) throw DataError("runs must be at least 1");
  if (folds < 2) throw DataError("cross-validation needs at least 2 folds");
  for (int f : evaluate_folds) {
    if (f < 0 || f >= folds) throw DataError("evaluated fold " + std::to_string(f) + " is out of range");
  }
  if (!(threshold > 0.0 && threshold < 1.0)) throw DataError("threshold must be in (0, 1)");
  if (embedding.dimension < 1) throw DataError("embedding dimension must be positive");
  if (embedding.max_len < 1) throw DataError("max_len must be positive");
  if (embedding.min_count < 1) throw DataError("min_count must be positive");
  training.validate();
  const bool per_level = mode == Mode::L1 || mode == Mode::L2 || mode == Mode::L3;
  if (per_level && configurations.empty()) throw DataError("no classifier configurations");
  for (const auto& c : configurations) c.validate();
  if (mode == Mode::Combined) {
    if (combined_levels.empty()) throw DataError("combined mode needs at least one level count");
    for (int levels : combined_levels) {
      if (levels != 2 && levels != 3) throw DataError("combined levels must be 2 or 3");
    }
  }
}

nlohmann::json ExperimentSpec::to_json() const {
  nlohmann::json json;
  json["name"] = name;
  json["mode"] = std::string(to_string(mode));
  if (corpus.synthetic) {
    json["corpus"] = {{"synthetic", corpus.synthetic->to_json()}, {"seed", corpus.synthetic_seed}};
  } else {
    json["corpus"] = {{"path", corpus.path.generic_string()},
                      {"format", corpus.format == CorpusFormat::Json ? "json" : "tsv"}};
  }
  switch (mode) {
    case Mode::L1:
    case Mode::L2:
    case Mode::L3: {
      nlohmann::json configs = nlohmann::json::array();
      for (const auto& c : configurations) configs.push_back(c.to_json());
      json["configurations"] = configs;
      break;
    }
    case Mode::Hierarchical:
      json["pipeline"] = {{"l1", l1.to_json()}, {"l2", l2.to_json()}, {"l3", l3.to_json()}};
      json["context_source"] = context_source == model::ContextSource::Gold ? "gold" : "predicted";
      break;
    case Mode::Combined:
      json["combined"] = {{"classifier", combined.to_json()}, {"levels", combined_levels}};
      break;
  }
  json["embedding"] = {{"dimension", embedding.dimension},
                       {"pretrained", embedding.pretrained.generic_string()},
                       {"trainable", embedding.trainable},
                       {"min_count", embedding.min_count},
                       {"max_len", embedding.max_len}};
  auto training_json = training.to_json();
  training_json.erase("seed");
  training_json.erase("threshold");
  json["training"] = training_json;
  json["folds"] = {{"k", folds}, {"seed", fold_seed}, {"evaluate", folds_to_evaluate()}};
  json["runs"] = runs;
  json["base_seed"] = base_seed;
  json["threshold"] = threshold;
  return json;
}

std::vector<int> ExperimentSpec::folds_to_evaluate() const {
  if (!evaluate_folds.empty()) {
    std::set<int> unique(evaluate_folds.begin(), evaluate_folds.end());
    return {unique.begin(), unique.end()};
  }
  std::vector<int> all(static_cast<std::size_t>(folds));
  for (int f = 0; f < folds; ++f) all[static_cast<std::size_t>(f)] = f;
  return all;
}

std::size_t ExperimentSpec::configuration_count() const {
  return mode == Mode::Hierarchical || mode == Mode::Combined ? 1 : configurations.size();
}

std::string ExperimentSpec::configuration_name(std::size_t index) const {
  if (mode == Mode::Hierarchical) return "hierarchical pipeline";
  if (mode == Mode::Combined) return "combined single-label";
  return configurations.at(index).name;
}

std::string config_hash(const ExperimentSpec& spec) {
  const std::string text = spec.to_json().dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof buffer, "%016llx", static_cast<unsigned long long>(hash));
  return buffer;
}

Corpus load_spec_corpus(const ExperimentSpec& spec) {
  if (spec.corpus.synthetic) return generate_synthetic(*spec.corpus.synthetic, spec.corpus.synthetic_seed);
  return load_corpus(spec.corpus.path, spec.corpus.format);
}

CellOutput default_cell_runner(const CellContext& context) {
  const auto& spec = context.spec;
  CellOutput output;
  nlohmann::json models = nlohmann::json::array();
  switch (spec.mode) {
    case Mode::L1:
    case Mode::L2:
    case Mode::L3: {
      const auto& config = spec.configurations.at(context.configuration);
      const auto trained = train_model(context, config, 0);
      models.push_back(history_json(config.task, trained.history));
      output.predictions["main"] = predict_level(*trained.classifier, context);
      break;
    }
    case Mode::Hierarchical: {
      model::HierarchicalPipeline pipeline;
      const auto l1 = train_model(context, spec.l1, 1);
      const auto l2 = train_model(context, spec.l2, 2);
      const auto l3 = train_model(context, spec.l3, 3);
      pipeline.l1 = l1.classifier;
      pipeline.l2 = l2.classifier;
      pipeline.l3 = l3.classifier;
      for (const auto* t : {&l1, &l2, &l3}) models.push_back(history_json(t->classifier->task(), t->history));
      auto& out = output.predictions["main"];
      for (const Dialog* dialog : context.evaluation) {
        auto predictions = model::hierarchical_predict(pipeline, *dialog, context.vocabulary, spec.embedding.max_len,
                                                       spec.context_source, spec.threshold);
        for (auto& p : predictions) out.push_back(std::move(p));
      }
      break;
    }
    case Mode::Combined: {
      std::vector<const Dialog*> training_side = context.train;
      training_side.insert(training_side.end(), context.validation.begin(), context.validation.end());
      for (int levels : spec.combined_levels) {
        const auto inventory = model::build_combined_inventory(training_side, levels);
        const auto trained = train_model(context, spec.combined, 10 + static_cast<std::uint64_t>(levels), &inventory);
        auto history = history_json(Task::Combined, trained.history);
        history["levels"] = levels;
        history["classes"] = inventory.size();
        models.push_back(history);
        auto& out = output.predictions[combined_stream(levels)];
        for (const Dialog* dialog : context.evaluation) {
          auto predictions =
              model::combined_predict(*trained.classifier, inventory, *dialog, context.vocabulary, spec.embedding.max_len);
          for (auto& p : predictions) out.push_back(std::move(p));
        }
      }
      break;
    }
  }
  output.provenance["models"] = models;
  return output;
}

std::string_view to_string(View view) {
  switch (view) {
    case View::L1: return "L1";
    case View::L2: return "L2";
    case View::L3: return "L3";
    case View::L1L2: return "L1+L2";
    case View::L1L2L3: return "L1+L2+L3";
  }
  return "?";
}

View parse_view(std::string_view text) {
  for (View v : {View::L1, View::L2, View::L3, View::L1L2, View::L1L2L3}) {
    if (text == to_string(v)) return v;
  }
  throw DataError("unknown evaluation view '" + std::string(text) + "'");
}

bool is_single_label(View view) { return view == View::L1; }

int view_label_count(View view) {
  const int l1 = metrics::evaluation_label_count(Level::L1);
  const int l2 = metrics::evaluation_label_count(Level::L2);
  const int l3 = metrics::evaluation_label_count(Level::L3);
  switch (view) {
    case View::L1: return l1;
    case View::L2: return l2;
    case View::L3: return l3;
    case View::L1L2: return l1 + l2;
    case View::L1L2L3: return l1 + l2 + l3;
  }
  return 0;
}

std::vector<int> view_labels(const Annotation& labels, View view) {
  const int l1_width = metrics::evaluation_label_count(Level::L1);
  const int l2_width = metrics::evaluation_label_count(Level::L2);
  switch (view) {
    case View::L1: return {labels.l1};
    case View::L2: return metrics::with_nil(labels.l2, Level::L2);
    case View::L3: return metrics::with_nil(labels.l3, Level::L3);
    case View::L1L2:
    case View::L1L2L3: {
      std::vector<int> out{labels.l1};
      for (int l : metrics::with_nil(labels.l2, Level::L2)) out.push_back(l1_width + l);
      if (view == View::L1L2L3) {
        for (int l : metrics::with_nil(labels.l3, Level::L3)) out.push_back(l1_width + l2_width + l);
      }
      return out;
    }
  }
  return {};
}

SpeakerBreakdown per_speaker_breakdown(std::span<const metrics::EvaluationPair> pairs, int label_count) {
  SpeakerBreakdown breakdown;
  breakdown.overall = metrics::evaluate(pairs, label_count);
  std::vector<metrics::EvaluationPair> user;
  std::vector<metrics::EvaluationPair> system;
  for (const auto& pair : pairs) (pair.speaker == Speaker::User ? user : system).push_back(pair);
  if (!user.empty()) breakdown.user = metrics::evaluate(user, label_count);
  if (!system.empty()) breakdown.system = metrics::evaluate(system, label_count);
  return breakdown;
}

ExperimentReport run_experiment(const ExperimentSpec& spec, const RunOptions& options) {
  return run_experiment(spec, load_spec_corpus(spec), options);
}

ExperimentReport run_experiment(const ExperimentSpec& spec, const Corpus& corpus, const RunOptions& options) {
  spec.validate();
  if (corpus.dialogs.size() < static_cast<std::size_t>(spec.folds)) {
    throw DataError("corpus has " + std::to_string(corpus.dialogs.size()) + " dialogs, fewer than " +
                    std::to_string(spec.folds) + " folds");
  }
  const auto folds = make_folds(corpus, spec.folds, spec.fold_seed);
  const auto vocab = build_vocab(corpus, spec.embedding.min_count);
  std::optional<EmbeddingTable> pretrained;
  if (!spec.embedding.pretrained.empty()) {
    pretrained = load_pretrained_embeddings(spec.embedding.pretrained, vocab, spec.embedding.dimension,
                                            derive_seed(spec.base_seed, kEmbeddingStream));
  }
  const auto eval_folds = spec.folds_to_evaluate();
  const std::size_t config_count = spec.configuration_count();

  struct Cell {
    std::size_t configuration;
    int fold;
    int run;
    CellOutput output;
    std::vector<const Dialog*> evaluation;
    std::exception_ptr error;
  };
  std::vector<Cell> cells;
  for (std::size_t c = 0; c < config_count; ++c) {
    for (int run = 0; run < spec.runs; ++run) {
      for (int fold : eval_folds) cells.push_back(Cell{c, fold, run, {}, {}, nullptr});
    }
  }

  const auto execute = [&](Cell& cell) {
    const std::uint64_t run_seed = spec.base_seed + static_cast<std::uint64_t>(cell.run);
    const std::uint64_t seed = derive_seed(run_seed, static_cast<std::uint64_t>(cell.fold));
    std::vector<std::string> rest;
    for (const auto& d : corpus.dialogs) {
      if (folds.fold_of_dialog.at(d.id) != cell.fold) rest.push_back(d.id);
    }
    const auto split = split_train_val(rest, spec.training.val_fraction, derive_seed(seed, kSplitStream));
    CellContext context{spec, corpus, vocab, pretrained ? &*pretrained : nullptr, cell.configuration, cell.fold,
                        cell.run, seed, dialogs_by_id(corpus, split.train), dialogs_by_id(corpus, split.val),
                        dialogs_by_id(corpus, folds.dialogs_in(cell.fold))};
    for (const auto* side : {&context.train, &context.validation}) {
      for (const Dialog* d : *side) {
        if (folds.fold_of_dialog.at(d->id) == cell.fold) {
          throw RuntimeFailure("fold hygiene violated: dialog " + d->id + " is both trained on and evaluated");
        }
      }
    }
    cell.evaluation = context.evaluation;
    try {
      cell.output = options.runner(context);
    } catch (const NumericError& e) {
      throw NumericError(spec.configuration_name(cell.configuration) + ", fold " + std::to_string(cell.fold) +
                         ", run " + std::to_string(cell.run) + ": " + e.what());
    } catch (const DataError& e) {
      throw DataError(spec.configuration_name(cell.configuration) + ", fold " + std::to_string(cell.fold) + ", run " +
                      std::to_string(cell.run) + ": " + e.what());
    } catch (const std::exception& e) {
      throw RuntimeFailure(spec.configuration_name(cell.configuration) + ", fold " + std::to_string(cell.fold) +
                           ", run " + std::to_string(cell.run) + ": " + e.what());
    }
    std::size_t expected = 0;
    for (const Dialog* d : cell.evaluation) expected += d->segments.size();
    for (const auto& [stream, predictions] : cell.output.predictions) {
      if (predictions.size() != expected) {
        throw RuntimeFailure("cell runner returned " + std::to_string(predictions.size()) + " '" + stream +
                             "' predictions for " + std::to_string(expected) + " segments");
      }
    }
  };

  const int jobs = std::max(1, options.jobs);
  if (jobs == 1) {
    for (auto& cell : cells) execute(cell);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
          try {
            execute(cells[i]);
          } catch (...) {
            cells[i].error = std::current_exception();
          }
        }
      });
    }
    for (auto& w : workers) w.join();
    for (const auto& cell : cells) {
      if (cell.error) std::rethrow_exception(cell.error);
    }
  }

  ExperimentReport report;
  report.name = spec.name;
  report.mode = spec.mode;
  report.config_hash = config_hash(spec);
  report.spec = spec.to_json();
  report.folds = to_json(folds);
  for (int run = 0; run < spec.runs; ++run) report.run_seeds.push_back(spec.base_seed + static_cast<std::uint64_t>(run));

  const std::set<int> evaluated_folds(eval_folds.begin(), eval_folds.end());
  const auto views = views_for(spec.mode, spec);
  std::size_t cell_index = 0;
  for (std::size_t c = 0; c < config_count; ++c) {
    ConfigurationReport config_report;
    config_report.name = spec.configuration_name(c);
    if (spec.mode == Mode::L1 || spec.mode == Mode::L2 || spec.mode == Mode::L3) {
      config_report.configuration = spec.configurations[c].to_json();
    } else {
      config_report.configuration = report.spec.contains("pipeline") ? report.spec["pipeline"] : report.spec["combined"];
    }
    for (const auto& d : corpus.dialogs) {
      if (!evaluated_folds.count(folds.fold_of_dialog.at(d.id))) continue;
      for (const auto& s : d.segments) {
        if (evaluated(spec.mode, s)) config_report.eval_keys.push_back(d.id + "#" + std::to_string(s.position));
      }
    }
    for (View view : views) config_report.sections.push_back(SectionReport{view, {}});

    for (int run = 0; run < spec.runs; ++run) {
      // (segment, prediction) per fold cell, keyed for corpus-order pooling.
      std::map<const Segment*, std::pair<int, std::size_t>> lookup;
      std::vector<const Cell*> run_cells;
      for (std::size_t k = 0; k < eval_folds.size(); ++k, ++cell_index) {
        const Cell& cell = cells[cell_index];
        run_cells.push_back(&cell);
        nlohmann::json provenance = cell.output.provenance;
        provenance["fold"] = cell.fold;
        provenance["run"] = cell.run;
        provenance["seed"] = report.run_seeds[static_cast<std::size_t>(run)];
        config_report.cells.push_back(provenance);
        std::size_t index = 0;
        for (const Dialog* d : cell.evaluation) {
          for (const auto& s : d->segments) lookup[&s] = {static_cast<int>(k), index++};
        }
      }
      std::set<std::string> emitted;
      for (auto& section : config_report.sections) {
        const std::string stream = stream_for(spec.mode, section.view);
        const bool emit = options.prediction_sink && emitted.insert(stream).second;
        std::vector<metrics::EvaluationPair> pairs;
        std::string correctness;
        for (const auto& d : corpus.dialogs) {
          if (!evaluated_folds.count(folds.fold_of_dialog.at(d.id))) continue;
          for (const auto& s : d.segments) {
            if (!evaluated(spec.mode, s)) continue;
            const auto [k, index] = lookup.at(&s);
            const auto& predictions = run_cells[static_cast<std::size_t>(k)]->output.predictions;
            const auto it = predictions.find(stream);
            if (it == predictions.end()) throw RuntimeFailure("cell runner produced no '" + stream + "' predictions");
            const auto& prediction = it->second[index];
            metrics::EvaluationPair pair{view_labels(s.labels, section.view),
                                         view_labels(prediction.labels, section.view), s.speaker};
            correctness.push_back(pair.gold == pair.predicted ? '1' : '0');
            pairs.push_back(std::move(pair));

            if (emit) {
              options.prediction_sink(PredictionRecord{c, stream, run, run_cells[static_cast<std::size_t>(k)]->fold, &s,
                                                       &prediction});
            }
          }
        }
        if (pairs.empty()) throw DataError("no segments to evaluate for " + std::string(to_string(section.view)));
        const auto breakdown = per_speaker_breakdown(pairs, view_label_count(section.view));
        RunResult result{breakdown.overall, breakdown.user, breakdown.system, {}, std::move(correctness)};
        if (section.view == View::L1 || section.view == View::L2 || section.view == View::L3) {
          result.per_label = metrics::per_label_prf(pairs, view_label_count(section.view));
        }
        section.runs.push_back(std::move(result));
      }
    }
    report.configurations.push_back(std::move(config_report));
  }
  return report;
}

}  // namespace diact::harness
