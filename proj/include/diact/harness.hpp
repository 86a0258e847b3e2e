#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "diact/checkpoint.hpp"
#include "diact/metrics.hpp"
#include "diact/pipeline.hpp"
#include "diact/synthetic.hpp"

namespace diact::harness {

enum class Mode { L1, L2, L3, Hierarchical, Combined };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

// DIACT_SEED when set, otherwise 0. Used for every seed a spec leaves out.
std::uint64_t default_seed();

struct CorpusSource {
  std::filesystem::path path;
  CorpusFormat format = CorpusFormat::Json;
  std::optional<SyntheticConfig> synthetic;
  std::uint64_t synthetic_seed = 0;
};

struct EmbeddingSpec {
  int dimension = 200;
  std::filesystem::path pretrained;  // empty: seeded random initialization
  bool trainable = true;
  int min_count = 1;
  int max_len = kDefaultMaxLen;
};

struct ExperimentSpec {
  std::string name;
  CorpusSource corpus;
  Mode mode = Mode::L1;
  std::vector<model::ClassifierConfig> configurations;  // L1/L2/L3 modes, after sweep expansion
  model::ClassifierConfig l1 = model::default_l1_config();
  model::ClassifierConfig l2 = model::default_l2_config();
  model::ClassifierConfig l3 = model::default_l3_config();
  model::ClassifierConfig combined = model::default_combined_config();
  std::vector<int> combined_levels{2, 3};
  EmbeddingSpec embedding;
  model::TrainingConfig training;
  int folds = 5;
  std::uint64_t fold_seed = 0;
  std::vector<int> evaluate_folds;  // empty: every fold
  int runs = 10;
  std::uint64_t base_seed = 0;
  model::ContextSource context_source = model::ContextSource::Gold;
  double threshold = 0.5;

  // Relative corpus and embedding paths resolve against `base_dir`.
  static ExperimentSpec from_json(const nlohmann::json& json, const std::filesystem::path& base_dir = {});
  static ExperimentSpec load(const std::filesystem::path& path);
  // Canonical form: every default filled in, sweeps expanded.
  nlohmann::json to_json() const;
  void validate() const;
  std::vector<int> folds_to_evaluate() const;
  // Number of result blocks: configurations, or 1 for pipeline modes.
  std::size_t configuration_count() const;
  std::string configuration_name(std::size_t index) const;
};

// FNV-1a 64 over the canonical JSON text, as 16 hex digits.
std::string config_hash(const ExperimentSpec& spec);

Corpus load_spec_corpus(const ExperimentSpec& spec);
std::string describe(const model::ContextConfig& context);

// Everything one (configuration, fold, run) cell gets to see.
struct CellContext {
  const ExperimentSpec& spec;
  const Corpus& corpus;
  const Vocabulary& vocabulary;
  const EmbeddingTable* pretrained = nullptr;  // shared, copy before training
  std::size_t configuration = 0;
  int fold = 0;
  int run = 0;
  std::uint64_t seed = 0;  // derived from the run seed and the fold
  std::vector<const Dialog*> train;
  std::vector<const Dialog*> validation;
  std::vector<const Dialog*> evaluation;
};

// Predictions for every segment of the evaluation dialogs, in dialog then
// position order, keyed by prediction stream ("main", or "L1+L2" and
// "L1+L2+L3" for the combined baseline). Segments a mode does not evaluate
// may hold empty annotations.
struct CellOutput {
  std::map<std::string, std::vector<model::SegmentPrediction>> predictions;
  nlohmann::json provenance = nlohmann::json::object();
};

using CellRunner = std::function<CellOutput(const CellContext&)>;

CellOutput default_cell_runner(const CellContext& context);

enum class View { L1, L2, L3, L1L2, L1L2L3 };

std::string_view to_string(View view);
View parse_view(std::string_view text);
bool is_single_label(View view);
int view_label_count(View view);
// Evaluation label set of one segment under a view. Joint views union the
// per-level sets (with explicit Nil) on disjoint index ranges, so exact match
// means every level agrees.
std::vector<int> view_labels(const Annotation& labels, View view);

struct RunResult {
  metrics::MultiLabelReport overall;
  std::optional<metrics::MultiLabelReport> user;
  std::optional<metrics::MultiLabelReport> system;
  std::vector<metrics::LabelPrf> per_label;  // per-level views only
  std::string correctness;                   // '1' per exactly matched evaluation segment
};

struct SectionReport {
  View view = View::L1;
  std::vector<RunResult> runs;

  // subset: "overall", "user" or "system"; metric: mr, acc, p, r, f1, hl.
  std::vector<double> values(std::string_view subset, std::string_view metric) const;
  metrics::RunStatistics statistics(std::string_view subset, std::string_view metric) const;
};

struct ConfigurationReport {
  std::string name;
  nlohmann::json configuration;
  std::vector<std::string> eval_keys;  // "dialog_id#position"
  std::vector<SectionReport> sections;
  nlohmann::json cells = nlohmann::json::array();

  const SectionReport* section(View view) const;
};

struct ExperimentReport {
  std::string name;
  Mode mode = Mode::L1;
  std::string config_hash;
  nlohmann::json spec;
  nlohmann::json folds;
  std::vector<std::uint64_t> run_seeds;
  std::vector<ConfigurationReport> configurations;
};

struct PredictionRecord {
  std::size_t configuration = 0;
  std::string stream;
  int run = 0;
  int fold = 0;
  const Segment* segment = nullptr;
  const model::SegmentPrediction* prediction = nullptr;
};

struct RunOptions {
  int jobs = 1;
  CellRunner runner = default_cell_runner;
  // Called once per evaluated segment after all cells finish, in
  // (configuration, run, stream, corpus order) order.
  std::function<void(const PredictionRecord&)> prediction_sink;
};

ExperimentReport run_experiment(const ExperimentSpec& spec, const Corpus& corpus, const RunOptions& options = {});
ExperimentReport run_experiment(const ExperimentSpec& spec, const RunOptions& options = {});

// Metrics of one pair list split by speaker; a speaker with no pairs gets no
// sub-report.
struct SpeakerBreakdown {
  metrics::MultiLabelReport overall;
  std::optional<metrics::MultiLabelReport> user;
  std::optional<metrics::MultiLabelReport> system;
};
SpeakerBreakdown per_speaker_breakdown(std::span<const metrics::EvaluationPair> pairs, int label_count);

// Lossless JSON (raw per-run values at full precision, summaries rounded).
nlohmann::ordered_json report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& json);
std::string emit_report_json(const ExperimentReport& report);
std::string emit_report_text(const ExperimentReport& report);
ExperimentReport load_report(const std::filesystem::path& path);
// Writes <hash>.report.json and <hash>.report.txt into `directory`.
std::filesystem::path write_report(const ExperimentReport& report, const std::filesystem::path& directory);

struct ComparisonResult {
  metrics::SignificanceResult test;
  View view = View::L1;
  std::size_t run_a = 0;
  std::size_t run_b = 0;
  std::string metric;  // "accuracy" or "exact match ratio"
};

// Samples one run per report (each with RandomSource(seed)) and applies the
// binomial test to their correctness counts on the shared evaluation set.
ComparisonResult compare(const ExperimentReport& a, const ExperimentReport& b, std::uint64_t seed,
                         std::optional<View> view = std::nullopt, std::size_t configuration_a = 0,
                         std::size_t configuration_b = 0);

nlohmann::ordered_json prediction_to_json(const PredictionRecord& record);

}  // namespace diact::harness
