// diact: command-line driver for corpus tools, training, evaluation and
// verification. Exit codes: 0 success, 1 usage error, 2 data error,
// 3 runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "diact/checkpoint.hpp"
#include "diact/error.hpp"
#include "diact/gradcheck.hpp"
#include "diact/harness.hpp"

namespace {

using namespace diact;
namespace fs = std::filesystem;

CorpusFormat format_for(const std::string& format, const fs::path& path) {
  if (!format.empty()) return parse_corpus_format(format);
  return path.extension() == ".tsv" ? CorpusFormat::Tsv : CorpusFormat::Json;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

harness::ExperimentSpec load_spec(const fs::path& path, std::optional<harness::Mode> forced) {
  if (!forced) return harness::ExperimentSpec::load(path);
  auto json = read_json(path);
  json["mode"] = std::string(harness::to_string(*forced));
  json.erase("configurations");
  json.erase("context_sweep");
  return harness::ExperimentSpec::from_json(json, path.parent_path());
}

std::string slug(const std::string& text) {
  std::string out;
  for (unsigned char c : text) {
    if (std::isalnum(c)) out.push_back(static_cast<char>(std::tolower(c)));
    else if (!out.empty() && out.back() != '-') out.push_back('-');
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "model" : out;
}

int run_gen_synth(const std::string& config_path, std::optional<std::uint64_t> seed, const fs::path& out,
                  const std::string& format) {
  const auto config = config_path.empty() ? SyntheticConfig::defaults() : SyntheticConfig::from_json(read_json(config_path));
  config.validate();
  const auto corpus = generate_synthetic(config, seed.value_or(harness::default_seed()));
  save_corpus(corpus, out, format_for(format, out));
  std::cout << "wrote " << out.string() << "\n" << format_stats(corpus_stats(corpus));
  return 0;
}

int run_stats(const fs::path& corpus_path, const std::string& format) {
  const auto corpus = load_corpus(corpus_path, format_for(format, corpus_path));
  std::cout << format_stats(corpus_stats(corpus));
  return 0;
}

struct TrainJob {
  model::ClassifierConfig config;
  int combined_levels = 0;
};

int run_train(const fs::path& spec_path, const fs::path& out_dir, std::optional<int> holdout) {
  const auto spec = harness::ExperimentSpec::load(spec_path);
  const auto corpus = harness::load_spec_corpus(spec);
  const auto vocab = build_vocab(corpus, spec.embedding.min_count);
  std::vector<std::string> ids;
  if (holdout) {
    const auto folds = make_folds(corpus, spec.folds, spec.fold_seed);
    if (*holdout < 0 || *holdout >= spec.folds) throw DataError("held-out fold out of range");
    for (const auto& d : corpus.dialogs) {
      if (folds.fold_of_dialog.at(d.id) != *holdout) ids.push_back(d.id);
    }
  } else {
    for (const auto& d : corpus.dialogs) ids.push_back(d.id);
  }
  const std::uint64_t seed = spec.base_seed;
  const auto split = split_train_val(ids, spec.training.val_fraction, derive_seed(seed, 1));
  const auto pick = [&](const std::vector<std::string>& wanted) {
    std::set<std::string> keep(wanted.begin(), wanted.end());
    std::vector<const Dialog*> out;
    for (const auto& d : corpus.dialogs) {
      if (keep.count(d.id)) out.push_back(&d);
    }
    return out;
  };
  const auto train_dialogs = pick(split.train);
  const auto val_dialogs = pick(split.val);

  std::vector<TrainJob> jobs;
  switch (spec.mode) {
    case harness::Mode::L1:
    case harness::Mode::L2:
    case harness::Mode::L3:
      for (const auto& c : spec.configurations) jobs.push_back({c, 0});
      break;
    case harness::Mode::Hierarchical:
      jobs = {{spec.l1, 0}, {spec.l2, 0}, {spec.l3, 0}};
      break;
    case harness::Mode::Combined:
      for (int levels : spec.combined_levels) jobs.push_back({spec.combined, levels});
      break;
  }

  EmbeddingTable embeddings =
      spec.embedding.pretrained.empty()
          ? random_embeddings(vocab, spec.embedding.dimension, derive_seed(seed, 2))
          : load_pretrained_embeddings(spec.embedding.pretrained, vocab, spec.embedding.dimension, derive_seed(seed, 2));
  embeddings.trainable = spec.embedding.trainable;
  fs::create_directories(out_dir);
  std::uint64_t stream = 0;
  for (const auto& job : jobs) {
    ++stream;
    std::optional<model::CombinedInventory> inventory;
    std::vector<const Dialog*> training_side = train_dialogs;
    training_side.insert(training_side.end(), val_dialogs.begin(), val_dialogs.end());
    if (job.combined_levels) inventory = model::build_combined_inventory(training_side, job.combined_levels);
    const auto* inv = inventory ? &*inventory : nullptr;
    const auto train_set = model::build_examples(train_dialogs, job.config, vocab, spec.embedding.max_len, inv);
    const auto val_set = model::build_examples(val_dialogs, job.config, vocab, spec.embedding.max_len, inv);
    const int classes = inv ? inv->size() : model::inventory_width(job.config.task);
    model::LevelClassifier classifier(job.config, embeddings, classes, derive_seed(derive_seed(seed, 3), stream));
    auto training = spec.training;
    training.seed = derive_seed(derive_seed(seed, 4), stream);
    training.threshold = spec.threshold;
    const auto history = model::train(classifier, train_set.examples, val_set.examples, training);

    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : history.epochs) {
      epochs.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"validation", e.validation_metric}});
    }
    const nlohmann::json extra{{"config_hash", harness::config_hash(spec)},
                               {"seed", seed},
                               {"holdout_fold", holdout ? nlohmann::json(*holdout) : nlohmann::json(nullptr)},
                               {"best_epoch", history.best_epoch},
                               {"best_validation", history.best_metric},
                               {"history", epochs}};
    std::string name = job.config.name.empty() ? std::string(model::to_string(job.config.task)) : job.config.name;
    if (job.combined_levels) name += " levels " + std::to_string(job.combined_levels);
    const auto stem = out_dir / slug(name);
    model::save_checkpoint(stem, classifier, vocab, spec.embedding.max_len, inv, extra);
    std::printf("%-50s best epoch %3d  validation %.4f  -> %s\n", name.c_str(), history.best_epoch,
                history.best_metric, model::manifest_path(stem).string().c_str());
  }
  return 0;
}

int run_eval(const fs::path& spec_path, std::optional<harness::Mode> mode, const fs::path& report_dir,
             const std::string& predictions_path, int jobs) {
  const auto spec = load_spec(spec_path, mode);
  harness::RunOptions options;
  options.jobs = jobs;
  std::ofstream predictions;
  if (!predictions_path.empty()) {
    predictions.open(predictions_path, std::ios::binary);
    if (!predictions) throw RuntimeFailure("cannot write " + predictions_path);
    options.prediction_sink = [&](const harness::PredictionRecord& record) {
      predictions << harness::prediction_to_json(record).dump() << '\n';
    };
  }
  const auto report = harness::run_experiment(spec, options);
  const auto path = harness::write_report(report, report_dir);
  std::cout << harness::emit_report_text(report) << "\nreport: " << path.string() << "\n";
  return 0;
}

int run_compare(const fs::path& a, const fs::path& b, std::optional<std::uint64_t> seed, const std::string& view,
                std::size_t config_a, std::size_t config_b) {
  const auto report_a = harness::load_report(a);
  const auto report_b = harness::load_report(b);
  std::optional<harness::View> chosen;
  if (!view.empty()) chosen = harness::parse_view(view);
  const auto result =
      harness::compare(report_a, report_b, seed.value_or(harness::default_seed()), chosen, config_a, config_b);
  const auto& t = result.test;
  std::printf("view %s, %s, runs a=%zu b=%zu\n", std::string(harness::to_string(result.view)).c_str(),
              result.metric.c_str(), result.run_a, result.run_b);
  std::printf("correct a=%zu b=%zu of n=%zu\n", t.successes_a, t.successes_b, t.n);
  std::printf("p = %.6g (log10 p = %.4f)  %s\n", t.p_value, t.log10_p_value,
              t.significant ? "significant" : "not significant");
  return 0;
}

int run_gradcheck(const std::string& config_path) {
  const auto config = config_path.empty() ? model::GradcheckConfig{}
                                          : model::GradcheckConfig::from_json(read_json(config_path));
  const auto checks = model::check_architectures(config);
  bool ok = true;
  for (const auto& c : checks) {
    std::printf("%-24s max relative error %.3e over %4zu coordinates  %s\n", c.name.c_str(),
                c.result.max_relative_error, c.result.coordinates, c.passed ? "ok" : "FAIL");
    if (!c.passed) {
      std::printf("    worst %s[%zu]: analytic %.10g numeric %.10g\n", c.result.worst_parameter.c_str(),
                  c.result.worst_index, c.result.worst_analytic, c.result.worst_numeric);
    }
    ok = ok && c.passed;
  }
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dialog act recognition toolkit"};
  app.require_subcommand(1);

  std::string config_path, format, corpus_path, spec_path, out_dir, report_dir = ".", predictions_path;
  std::string report_a, report_b, view;
  std::optional<std::uint64_t> seed;
  std::optional<int> holdout;
  std::size_t config_a = 0, config_b = 0;
  int jobs = 1;

  auto* gen = app.add_subcommand("gen-synth", "Generate a synthetic annotated corpus");
  gen->add_option("--config", config_path, "Generator configuration (JSON); defaults when omitted")->check(CLI::ExistingFile);
  gen->add_option("--seed", seed, "Random seed (default: DIACT_SEED or 0)");
  gen->add_option("--out", out_dir, "Output corpus file")->required();
  gen->add_option("--format", format, "json or tsv (default: from the file extension)");

  auto* stats = app.add_subcommand("stats", "Print per-level label distribution tables");
  stats->add_option("--corpus", corpus_path, "Corpus file")->required();
  stats->add_option("--format", format, "json or tsv (default: from the file extension)");

  auto* train = app.add_subcommand("train", "Train the classifiers of an experiment spec and write checkpoints");
  train->add_option("--spec", spec_path, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
  train->add_option("--out", out_dir, "Checkpoint directory")->required();
  train->add_option("--holdout-fold", holdout, "Leave this cross-validation fold out of training");

  const auto add_eval_flags = [&](CLI::App* cmd) {
    cmd->add_option("--spec", spec_path, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--report", report_dir, "Report directory (default: current directory)");
    cmd->add_option("--predictions", predictions_path, "Write per-segment predictions as JSON lines");
    cmd->add_option("--jobs", jobs, "Parallel (fold, run) cells (default 1)")->check(CLI::PositiveNumber);
  };
  auto* eval = app.add_subcommand("eval", "Run the cross-validated experiment of a spec");
  add_eval_flags(eval);
  auto* hier = app.add_subcommand("hier-eval", "Evaluate the hierarchical pipeline of a spec");
  add_eval_flags(hier);
  auto* combo = app.add_subcommand("combo-eval", "Evaluate the combined single-label baseline of a spec");
  add_eval_flags(combo);

  auto* cmp = app.add_subcommand("compare", "Binomial significance test between two reports");
  cmp->add_option("--report-a", report_a, "First report (JSON)")->required()->check(CLI::ExistingFile);
  cmp->add_option("--report-b", report_b, "Second report (JSON)")->required()->check(CLI::ExistingFile);
  cmp->add_option("--seed", seed, "Seed for the run draw (default: DIACT_SEED or 0)");
  cmp->add_option("--view", view, "L1, L2, L3, L1+L2 or L1+L2+L3 (default: first shared view)");
  cmp->add_option("--config-a", config_a, "Configuration index in the first report");
  cmp->add_option("--config-b", config_b, "Configuration index in the second report");

  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every assembled architecture");
  grad->add_option("--config", config_path, "Gradient-check settings (JSON)")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*gen) return run_gen_synth(config_path, seed, out_dir, format);
    if (*stats) return run_stats(corpus_path, format);
    if (*train) return run_train(spec_path, out_dir, holdout);
    if (*eval) return run_eval(spec_path, std::nullopt, report_dir, predictions_path, jobs);
    if (*hier) return run_eval(spec_path, harness::Mode::Hierarchical, report_dir, predictions_path, jobs);
    if (*combo) return run_eval(spec_path, harness::Mode::Combined, report_dir, predictions_path, jobs);
    if (*cmp) return run_compare(report_a, report_b, seed, view, config_a, config_b);
    if (*grad) return run_gradcheck(config_path);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
