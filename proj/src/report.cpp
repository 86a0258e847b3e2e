#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "diact/error.hpp"
#include "diact/harness.hpp"

namespace diact::harness {
namespace {

using nlohmann::ordered_json;

constexpr const char* kMetricKeys[] = {"mr", "acc", "p", "r", "f1", "hl"};

double metric_of(const metrics::MultiLabelReport& report, std::string_view metric) {
  if (metric == "mr") return report.mr;
  if (metric == "acc") return report.acc;
  if (metric == "p") return report.p;
  if (metric == "r") return report.r;
  if (metric == "f1") return report.f1;
  if (metric == "hl") return report.hl;
  throw std::invalid_argument("unknown metric '" + std::string(metric) + "'");
}

const std::optional<metrics::MultiLabelReport>* subset_of(const RunResult& run, std::string_view subset) {
  if (subset == "user") return &run.user;
  if (subset == "system") return &run.system;
  return nullptr;
}

double rounded(double value, int decimals) {
  const double scale = std::pow(10.0, decimals);
  return std::round(value * scale) / scale;
}

ordered_json raw_metrics(const metrics::MultiLabelReport& r) {
  return {{"mr", r.mr}, {"acc", r.acc}, {"p", r.p}, {"r", r.r}, {"f1", r.f1}, {"hl", r.hl}, {"n", r.n}};
}

metrics::MultiLabelReport raw_metrics_from(const nlohmann::json& json) { return metrics::MultiLabelReport::from_json(json); }

std::string label_name(View view, int label) {
  const auto& space = LabelSpace::canonical();
  const Level level = view == View::L1 ? Level::L1 : view == View::L2 ? Level::L2 : Level::L3;
  if (level != Level::L1 && label == metrics::nil_index(level)) return "Nil";
  return std::string(space.name(level, label));
}

ordered_json summary_json(const SectionReport& section, std::string_view subset) {
  ordered_json out;
  for (const char* metric : kMetricKeys) {
    const auto stats = section.statistics(subset, metric);
    const int decimals = std::string_view(metric) == "hl" ? 4 : 2;
    out[metric] = {{"m", rounded(stats.mean, decimals)}, {"s", rounded(stats.stddev, decimals)}};
  }
  return out;
}

bool has_subset(const SectionReport& section, std::string_view subset) {
  if (subset == "overall") return true;
  for (const auto& run : section.runs) {
    if (!subset_of(run, subset)->has_value()) return false;
  }
  return !section.runs.empty();
}

std::string fixed(double value, int decimals) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.*f", decimals, value);
  return buffer;
}

std::string pad(const std::string& text, std::size_t width) {
  // Width counts code points so accented label names line up.
  std::size_t points = 0;
  for (unsigned char c : text) points += (c & 0xC0) != 0x80 ? 1 : 0;
  return points >= width ? text + " " : text + std::string(width - points, ' ');
}

std::string timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buffer[32];
  std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buffer;
}

}  // namespace

std::vector<double> SectionReport::values(std::string_view subset, std::string_view metric) const {
  std::vector<double> out;
  for (const auto& run : runs) {
    if (subset == "overall") {
      out.push_back(metric_of(run.overall, metric));
      continue;
    }
    const auto* sub = subset_of(run, subset);
    if (sub == nullptr) throw std::invalid_argument("unknown subset '" + std::string(subset) + "'");
    if (!sub->has_value()) throw std::invalid_argument("subset '" + std::string(subset) + "' has no segments");
    out.push_back(metric_of(**sub, metric));
  }
  return out;
}

metrics::RunStatistics SectionReport::statistics(std::string_view subset, std::string_view metric) const {
  const auto v = values(subset, metric);
  if (v.size() == 1) return metrics::RunStatistics{v[0], 0.0, 1};
  return metrics::aggregate_runs(v);
}

const SectionReport* ConfigurationReport::section(View view) const {
  for (const auto& s : sections) {
    if (s.view == view) return &s;
  }
  return nullptr;
}

nlohmann::ordered_json report_to_json(const ExperimentReport& report) {
  ordered_json out;
  out["name"] = report.name;
  out["mode"] = std::string(to_string(report.mode));
  out["config_hash"] = report.config_hash;
  out["run_seeds"] = report.run_seeds;
  ordered_json configurations = ordered_json::array();
  for (const auto& config : report.configurations) {
    ordered_json c;
    c["name"] = config.name;
    ordered_json sections = ordered_json::array();
    for (const auto& section : config.sections) {
      ordered_json s;
      s["view"] = std::string(to_string(section.view));
      s["label_count"] = view_label_count(section.view);
      s["primary_metric"] = is_single_label(section.view) ? "accuracy" : "exact match ratio";
      ordered_json summary;
      for (const char* subset : {"overall", "user", "system"}) {
        if (has_subset(section, subset)) summary[subset] = summary_json(section, subset);
      }
      s["summary"] = summary;
      ordered_json runs = ordered_json::array();
      for (const auto& run : section.runs) {
        ordered_json r;
        r["overall"] = raw_metrics(run.overall);
        if (run.user) r["user"] = raw_metrics(*run.user);
        if (run.system) r["system"] = raw_metrics(*run.system);
        if (!run.per_label.empty()) {
          ordered_json labels = ordered_json::array();
          for (const auto& l : run.per_label) {
            labels.push_back({{"label", l.label},
                              {"name", label_name(section.view, l.label)},
                              {"tp", l.true_positives},
                              {"fp", l.false_positives},
                              {"fn", l.false_negatives},
                              {"precision", l.precision},
                              {"recall", l.recall},
                              {"f1", l.f1},
                              {"never_predicted", l.never_predicted},
                              {"no_support", l.no_support}});
          }
          r["per_label"] = labels;
        }
        r["correctness"] = run.correctness;
        runs.push_back(r);
      }
      s["runs"] = runs;
      sections.push_back(s);
    }
    c["sections"] = sections;
    c["configuration"] = config.configuration;
    c["eval_keys"] = config.eval_keys;
    c["cells"] = config.cells;
    configurations.push_back(c);
  }
  out["configurations"] = configurations;
  out["spec"] = report.spec;
  out["folds"] = report.folds;
  return out;
}

ExperimentReport report_from_json(const nlohmann::json& json) {
  ExperimentReport report;
  try {
    report.name = json.at("name").get<std::string>();
    report.mode = parse_mode(json.at("mode").get<std::string>());
    report.config_hash = json.at("config_hash").get<std::string>();
    report.run_seeds = json.at("run_seeds").get<std::vector<std::uint64_t>>();
    report.spec = json.at("spec");
    report.folds = json.at("folds");
    for (const auto& c : json.at("configurations")) {
      ConfigurationReport config;
      config.name = c.at("name").get<std::string>();
      config.configuration = c.at("configuration");
      config.eval_keys = c.at("eval_keys").get<std::vector<std::string>>();
      config.cells = c.at("cells");
      for (const auto& s : c.at("sections")) {
        SectionReport section;
        section.view = parse_view(s.at("view").get<std::string>());
        for (const auto& r : s.at("runs")) {
          RunResult run;
          run.overall = raw_metrics_from(r.at("overall"));
          if (r.contains("user")) run.user = raw_metrics_from(r.at("user"));
          if (r.contains("system")) run.system = raw_metrics_from(r.at("system"));
          if (r.contains("per_label")) {
            for (const auto& l : r.at("per_label")) {
              metrics::LabelPrf prf;
              prf.label = l.at("label").get<int>();
              prf.true_positives = l.at("tp").get<std::size_t>();
              prf.false_positives = l.at("fp").get<std::size_t>();
              prf.false_negatives = l.at("fn").get<std::size_t>();
              prf.precision = l.at("precision").get<double>();
              prf.recall = l.at("recall").get<double>();
              prf.f1 = l.at("f1").get<double>();
              prf.never_predicted = l.at("never_predicted").get<bool>();
              prf.no_support = l.at("no_support").get<bool>();
              run.per_label.push_back(prf);
            }
          }
          run.correctness = r.at("correctness").get<std::string>();
          if (run.correctness.size() != config.eval_keys.size()) {
            throw DataError("report: correctness vector does not match the evaluation keys");
          }
          section.runs.push_back(std::move(run));
        }
        config.sections.push_back(std::move(section));
      }
      report.configurations.push_back(std::move(config));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  return report;
}

std::string emit_report_json(const ExperimentReport& report) {
  return report_to_json(report).dump(1) + "\n";
}

std::string emit_report_text(const ExperimentReport& report) {
  std::ostringstream out;
  out << report.name << "  (mode " << to_string(report.mode) << ", config " << report.config_hash << ", "
      << report.run_seeds.size() << " run" << (report.run_seeds.size() == 1 ? "" : "s") << ")\n";

  std::vector<View> views;
  for (const auto& config : report.configurations) {
    for (const auto& section : config.sections) {
      if (std::find(views.begin(), views.end(), section.view) == views.end()) views.push_back(section.view);
    }
  }
  std::size_t name_width = 14;
  for (const auto& config : report.configurations) name_width = std::max(name_width, config.name.size() + 2);

  for (View view : views) {
    out << "\n== " << to_string(view) << " ==\n";
    if (is_single_label(view)) {
      out << pad("configuration", name_width) << pad("acc m", 9) << pad("acc s", 9) << pad("user m", 9)
          << pad("user s", 9) << pad("system m", 9) << "system s\n";
      for (const auto& config : report.configurations) {
        const auto* section = config.section(view);
        if (section == nullptr) continue;
        out << pad(config.name, name_width);
        for (const char* subset : {"overall", "user", "system"}) {
          if (has_subset(*section, subset)) {
            const auto stats = section->statistics(subset, "acc");
            out << pad(fixed(stats.mean, 2), 9) << pad(fixed(stats.stddev, 2), 9);
          } else {
            out << pad("-", 9) << pad("-", 9);
          }
        }
        out << "\n";
      }
      continue;
    }
    for (const char* subset : {"overall", "user", "system"}) {
      out << "-- " << subset << " --\n" << pad("configuration", name_width);
      for (const char* metric : {"MR", "Acc", "P", "R", "F1", "HL"}) {
        out << pad(std::string(metric) + " m", 9) << pad(std::string(metric) + " s", 9);
      }
      out << "\n";
      for (const auto& config : report.configurations) {
        const auto* section = config.section(view);
        if (section == nullptr) continue;
        out << pad(config.name, name_width);
        for (const char* metric : kMetricKeys) {
          const int decimals = std::string_view(metric) == "hl" ? 4 : 2;
          if (has_subset(*section, subset)) {
            const auto stats = section->statistics(subset, metric);
            out << pad(fixed(stats.mean, decimals), 9) << pad(fixed(stats.stddev, decimals), 9);
          } else {
            out << pad("-", 9) << pad("-", 9);
          }
        }
        out << "\n";
      }
    }
  }
  return out.str();
}

ExperimentReport load_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report " + path.string());
  try {
    return report_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError("report " + path.string() + ": " + e.what());
  }
}

std::filesystem::path write_report(const ExperimentReport& report, const std::filesystem::path& directory) {
  std::filesystem::create_directories(directory);
  const auto json_path = directory / (report.config_hash + ".report.json");
  const auto text_path = directory / (report.config_hash + ".report.txt");
  std::ofstream json_out(json_path, std::ios::binary);
  json_out << emit_report_json(report);
  std::ofstream text_out(text_path, std::ios::binary);
  text_out << "generated " << timestamp() << "\n" << emit_report_text(report);
  if (!json_out || !text_out) throw RuntimeFailure("cannot write report into " + directory.string());
  return json_path;
}

ComparisonResult compare(const ExperimentReport& a, const ExperimentReport& b, std::uint64_t seed,
                         std::optional<View> view, std::size_t configuration_a, std::size_t configuration_b) {
  if (configuration_a >= a.configurations.size() || configuration_b >= b.configurations.size()) {
    throw DataError("compare: configuration index out of range");
  }
  const auto& ca = a.configurations[configuration_a];
  const auto& cb = b.configurations[configuration_b];
  if (!view) {
    for (const auto& section : ca.sections) {
      if (cb.section(section.view)) {
        view = section.view;
        break;
      }
    }
    if (!view) throw DataError("compare: the reports share no evaluation view");
  }
  const auto* sa = ca.section(*view);
  const auto* sb = cb.section(*view);
  if (sa == nullptr || sb == nullptr) {
    throw DataError("compare: view " + std::string(to_string(*view)) + " missing from a report");
  }
  if (ca.eval_keys != cb.eval_keys) throw DataError("compare: the reports were evaluated on different segments");
  if (sa->runs.empty() || sb->runs.empty()) throw DataError("compare: a report has no runs");

  ComparisonResult result;
  result.view = *view;
  result.metric = is_single_label(*view) ? "accuracy" : "exact match ratio";
  RandomSource pick_a(seed);
  RandomSource pick_b(seed);
  result.run_a = static_cast<std::size_t>(pick_a.uniform_index(sa->runs.size()));
  result.run_b = static_cast<std::size_t>(pick_b.uniform_index(sb->runs.size()));
  const auto& bits_a = sa->runs[result.run_a].correctness;
  const auto& bits_b = sb->runs[result.run_b].correctness;
  const auto count = [](const std::string& bits) { return static_cast<std::size_t>(std::count(bits.begin(), bits.end(), '1')); };
  result.test = metrics::binomial_significance(count(bits_a), count(bits_b), bits_a.size());
  return result;
}

nlohmann::ordered_json prediction_to_json(const PredictionRecord& record) {
  const auto& space = LabelSpace::canonical();
  const auto names = [&](Level level, const std::vector<int>& set) {
    std::vector<std::string> out;
    for (int index : set) out.emplace_back(space.name(level, index));
    return out;
  };
  const auto labels_json = [&](const Annotation& a) {
    ordered_json j;
    j["l1"] = std::string(space.name(Level::L1, a.l1));
    j["l2"] = names(Level::L2, a.l2);
    j["l3"] = names(Level::L3, a.l3);
    return j;
  };
  const auto& segment = *record.segment;
  const auto& prediction = *record.prediction;
  ordered_json out;
  out["configuration"] = record.configuration;
  out["stream"] = record.stream;
  out["run"] = record.run;
  out["fold"] = record.fold;
  out["dialog_id"] = segment.dialog_id;
  out["position"] = segment.position;
  out["speaker"] = std::string(to_string(segment.speaker));
  out["gold"] = labels_json(segment.labels);
  out["predicted"] = labels_json(prediction.labels);
  out["probabilities"] = {{"l1", prediction.l1_probabilities},
                          {"l2", prediction.l2_probabilities},
                          {"l3", prediction.l3_probabilities}};
  return out;
}

}  // namespace diact::harness
