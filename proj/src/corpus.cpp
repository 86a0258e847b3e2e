#include "diact/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "diact/error.hpp"
#include "diact/random.hpp"
#include "diact/text.hpp"

namespace diact {
namespace {

using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
}

bool is_nil_name(std::string_view name) { return name == "Nil" || name == "Nulo"; }

// Resolves label names to a sorted index set. Duplicates are an error.
std::vector<int> resolve_set(Level level, const std::vector<std::string>& names, const std::string& where) {
  const auto& space = LabelSpace::canonical();
  std::vector<int> indices;
  for (const auto& name : names) {
    if (is_nil_name(name)) {
      if (names.size() != 1) throw DataError(where + ": Nil combined with other " + std::string(to_string(level)) + " labels");
      continue;
    }
    const auto index = space.find(level, name);
    if (!index) throw DataError(where + ": unknown " + std::string(to_string(level)) + " label '" + name + "'");
    indices.push_back(*index);
  }
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
    throw DataError(where + ": duplicate " + std::string(to_string(level)) + " label");
  }
  return indices;
}

Annotation resolve_annotation(const std::string& l1, const std::vector<std::string>& l2,
                              const std::vector<std::string>& l3, const std::string& where) {
  const auto& space = LabelSpace::canonical();
  const auto l1_index = space.find(Level::L1, l1);
  if (!l1_index) throw DataError(where + ": unknown L1 label '" + l1 + "'");
  Annotation labels{*l1_index, resolve_set(Level::L2, l2, where), resolve_set(Level::L3, l3, where)};
  if (space.is_gate(labels.l1) && (!labels.l2.empty() || !labels.l3.empty())) {
    throw DataError(where + ": gate violation, L1 label '" + l1 + "' cannot carry L2/L3 labels");
  }
  return labels;
}

void throw_on_violations(const Corpus& corpus) {
  const auto violations = validate(corpus);
  if (violations.empty()) return;
  const auto& v = violations.front();
  throw DataError("dialog '" + v.dialog_id + "' position " + std::to_string(v.position) + ": " +
                  std::string(to_string(v.kind)) + ": " + v.message);
}

std::vector<std::string> split(const std::string& text, char separator) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    const auto next = text.find(separator, start);
    parts.push_back(text.substr(start, next == std::string::npos ? std::string::npos : next - start));
    if (next == std::string::npos) break;
    start = next + 1;
  }
  return parts;
}

std::vector<std::string> split_label_column(const std::string& column) {
  if (column == "-" || column.empty()) return {};
  return split(column, ',');
}

std::string join_names(Level level, const std::vector<int>& indices, const char* separator) {
  const auto& space = LabelSpace::canonical();
  std::string out;
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (i) out += separator;
    out += space.name(level, indices[i]);
  }
  return out;
}

ordered_json names_json(Level level, const std::vector<int>& indices) {
  ordered_json out = ordered_json::array();
  for (int index : indices) out.push_back(std::string(LabelSpace::canonical().name(level, index)));
  return out;
}

}  // namespace

std::vector<Annotation> Dialog::annotations() const {
  std::vector<Annotation> out;
  out.reserve(segments.size());
  for (const auto& segment : segments) out.push_back(segment.labels);
  return out;
}

std::size_t Corpus::segment_count() const {
  std::size_t total = 0;
  for (const auto& dialog : dialogs) total += dialog.segments.size();
  return total;
}

CorpusFormat parse_corpus_format(std::string_view text) {
  if (text == "json") return CorpusFormat::Json;
  if (text == "tsv") return CorpusFormat::Tsv;
  throw DataError("unknown corpus format '" + std::string(text) + "' (expected json or tsv)");
}

Corpus parse_corpus_json(const std::string& text) {
  nlohmann::json root;
  try {
    root = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("corpus JSON parse error: ") + e.what());
  }
  if (!root.is_object() || !root.contains("dialogs") || !root["dialogs"].is_array()) {
    throw DataError("corpus JSON: expected an object with a \"dialogs\" array");
  }
  Corpus corpus;
  std::size_t dialog_index = 0;
  for (const auto& jd : root["dialogs"]) {
    const std::string where_dialog = "dialog record " + std::to_string(dialog_index++);
    try {
      Dialog dialog;
      dialog.id = jd.at("id").get<std::string>();
      int position = 0;
      for (const auto& js : jd.at("segments")) {
        const std::string where = where_dialog + " ('" + dialog.id + "') segment " + std::to_string(position);
        Segment segment;
        segment.dialog_id = dialog.id;
        segment.position = position++;
        segment.speaker = parse_speaker(js.at("speaker").get<std::string>());
        segment.text = js.at("text").get<std::string>();
        segment.labels = resolve_annotation(js.at("l1").get<std::string>(),
                                            js.value("l2", std::vector<std::string>{}),
                                            js.value("l3", std::vector<std::string>{}), where);
        dialog.segments.push_back(std::move(segment));
      }
      corpus.dialogs.push_back(std::move(dialog));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where_dialog + ": malformed record: " + e.what());
    }
  }
  throw_on_violations(corpus);
  return corpus;
}

Corpus parse_corpus_tsv(const std::string& text) {
  Corpus corpus;
  std::unordered_map<std::string, std::size_t> dialog_slot;
  std::istringstream in(text);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const std::string where = "TSV line " + std::to_string(line_number);
    const auto columns = split(line, '\t');
    if (columns.size() != 7) {
      throw DataError(where + ": expected 7 tab-separated columns, found " + std::to_string(columns.size()));
    }
    Segment segment;
    segment.dialog_id = columns[0];
    try {
      std::size_t consumed = 0;
      segment.position = std::stoi(columns[1], &consumed);
      if (consumed != columns[1].size() || segment.position < 0) throw std::invalid_argument("position");
    } catch (const std::exception&) {
      throw DataError(where + ": malformed position '" + columns[1] + "'");
    }
    try {
      segment.speaker = parse_speaker(columns[2]);
    } catch (const DataError& e) {
      throw DataError(where + ": " + e.what());
    }
    segment.labels = resolve_annotation(columns[3], split_label_column(columns[4]),
                                        split_label_column(columns[5]), where);
    segment.text = columns[6];
    auto [it, inserted] = dialog_slot.emplace(segment.dialog_id, corpus.dialogs.size());
    if (inserted) corpus.dialogs.push_back(Dialog{segment.dialog_id, {}});
    corpus.dialogs[it->second].segments.push_back(std::move(segment));
  }
  for (auto& dialog : corpus.dialogs) {
    std::stable_sort(dialog.segments.begin(), dialog.segments.end(),
                     [](const Segment& a, const Segment& b) { return a.position < b.position; });
  }
  throw_on_violations(corpus);
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  const auto content = read_file(path);
  return format == CorpusFormat::Json ? parse_corpus_json(content) : parse_corpus_tsv(content);
}

std::string corpus_to_json(const Corpus& corpus) {
  ordered_json dialogs = ordered_json::array();
  for (const auto& dialog : corpus.dialogs) {
    ordered_json segments = ordered_json::array();
    for (const auto& segment : dialog.segments) {
      ordered_json js;
      js["speaker"] = std::string(to_string(segment.speaker));
      js["text"] = segment.text;
      js["l1"] = std::string(LabelSpace::canonical().name(Level::L1, segment.labels.l1));
      js["l2"] = names_json(Level::L2, segment.labels.l2);
      js["l3"] = names_json(Level::L3, segment.labels.l3);
      segments.push_back(std::move(js));
    }
    ordered_json jd;
    jd["id"] = dialog.id;
    jd["segments"] = std::move(segments);
    dialogs.push_back(std::move(jd));
  }
  ordered_json root;
  root["dialogs"] = std::move(dialogs);
  return root.dump(1) + "\n";
}

std::string corpus_to_tsv(const Corpus& corpus) {
  std::string out = "# dialog_id\tposition\tspeaker\tl1\tl2\tl3\ttext\n";
  for (const auto& dialog : corpus.dialogs) {
    for (const auto& segment : dialog.segments) {
      if (segment.text.find_first_of("\t\n\r") != std::string::npos) {
        throw DataError("dialog '" + dialog.id + "' position " + std::to_string(segment.position) +
                        ": text with tabs or newlines cannot be written as TSV");
      }
      const auto l2 = segment.labels.l2.empty() ? std::string("-") : join_names(Level::L2, segment.labels.l2, ",");
      const auto l3 = segment.labels.l3.empty() ? std::string("-") : join_names(Level::L3, segment.labels.l3, ",");
      out += dialog.id + '\t' + std::to_string(segment.position) + '\t' + std::string(to_string(segment.speaker)) +
             '\t' + std::string(LabelSpace::canonical().name(Level::L1, segment.labels.l1)) + '\t' + l2 + '\t' +
             l3 + '\t' + segment.text + '\n';
    }
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format) {
  write_file(path, format == CorpusFormat::Json ? corpus_to_json(corpus) : corpus_to_tsv(corpus));
}

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::GateViolation: return "gate-violation";
    case ViolationKind::DuplicateLabel: return "duplicate-label";
    case ViolationKind::UnsortedLabels: return "unsorted-labels";
    case ViolationKind::LabelOutOfRange: return "label-out-of-range";
    case ViolationKind::PositionGap: return "position-gap";
    case ViolationKind::DialogIdMismatch: return "dialog-id-mismatch";
    case ViolationKind::DuplicateDialogId: return "duplicate-dialog-id";
    case ViolationKind::EmptyText: return "empty-text";
  }
  return "unknown";
}

std::vector<Violation> validate(const Corpus& corpus) {
  const auto& space = corpus.label_space();
  std::vector<Violation> out;
  std::set<std::string> seen_ids;
  for (const auto& dialog : corpus.dialogs) {
    if (!seen_ids.insert(dialog.id).second) {
      out.push_back({ViolationKind::DuplicateDialogId, dialog.id, -1, "dialog id appears more than once"});
    }
    for (std::size_t i = 0; i < dialog.segments.size(); ++i) {
      const auto& segment = dialog.segments[i];
      const auto report = [&](ViolationKind kind, std::string message) {
        out.push_back({kind, dialog.id, segment.position, std::move(message)});
      };
      if (segment.dialog_id != dialog.id) {
        report(ViolationKind::DialogIdMismatch, "segment belongs to '" + segment.dialog_id + "'");
      }
      if (segment.position != static_cast<int>(i)) {
        report(ViolationKind::PositionGap, "expected position " + std::to_string(i) + ", found " +
                                               std::to_string(segment.position));
      }
      const bool l1_ok = segment.labels.l1 >= 0 && static_cast<std::size_t>(segment.labels.l1) < space.size(Level::L1);
      if (!l1_ok) report(ViolationKind::LabelOutOfRange, "L1 index " + std::to_string(segment.labels.l1));
      for (Level level : {Level::L2, Level::L3}) {
        const auto& set = segment.labels.set(level);
        for (int index : set) {
          if (index < 0 || static_cast<std::size_t>(index) >= space.size(level)) {
            report(ViolationKind::LabelOutOfRange, std::string(to_string(level)) + " index " + std::to_string(index));
          }
        }
        std::vector<int> sorted = set;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
          report(ViolationKind::DuplicateLabel, std::string(to_string(level)) + " set repeats a label");
        } else if (sorted != set) {
          report(ViolationKind::UnsortedLabels, std::string(to_string(level)) + " set not in inventory order");
        }
      }
      if (l1_ok && space.is_gate(segment.labels.l1) && (!segment.labels.l2.empty() || !segment.labels.l3.empty())) {
        report(ViolationKind::GateViolation,
               "L1 '" + std::string(space.name(Level::L1, segment.labels.l1)) + "' carries L2/L3 labels");
      }
      if (tokenize(segment.text).empty()) report(ViolationKind::EmptyText, "text has no tokens");
    }
  }
  return out;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  const auto& space = corpus.label_space();
  CorpusStats stats;
  stats.dialogs = corpus.dialogs.size();
  const auto init = [&](Level level, bool with_nil) {
    std::vector<LabelCount> rows;
    if (with_nil) rows.push_back(LabelCount{"Nil"});
    for (const auto& label : space.labels(level)) rows.push_back(LabelCount{label.name});
    return rows;
  };
  stats.l1 = init(Level::L1, false);
  stats.l2 = init(Level::L2, true);
  stats.l3 = init(Level::L3, true);
  const auto bump = [](LabelCount& row, Speaker speaker) {
    ++(speaker == Speaker::User ? row.user : row.system);
    ++row.total;
  };
  for (const auto& dialog : corpus.dialogs) {
    for (const auto& segment : dialog.segments) {
      ++stats.segments;
      ++(segment.speaker == Speaker::User ? stats.user_segments : stats.system_segments);
      bump(stats.l1[static_cast<std::size_t>(segment.labels.l1)], segment.speaker);
      for (auto [level, rows] : {std::pair{Level::L2, &stats.l2}, std::pair{Level::L3, &stats.l3}}) {
        const auto& set = segment.labels.set(level);
        if (set.empty()) bump((*rows)[0], segment.speaker);
        for (int index : set) bump((*rows)[static_cast<std::size_t>(index) + 1], segment.speaker);
      }
    }
  }
  for (auto* rows : {&stats.l1, &stats.l2, &stats.l3}) {
    std::size_t occurrences = 0;
    for (const auto& row : *rows) occurrences += row.total;
    for (auto& row : *rows) {
      row.percent_of_segments = stats.segments ? 100.0 * static_cast<double>(row.total) / static_cast<double>(stats.segments) : 0.0;
      row.percent_of_occurrences = occurrences ? 100.0 * static_cast<double>(row.total) / static_cast<double>(occurrences) : 0.0;
    }
  }
  return stats;
}

std::string format_stats(const CorpusStats& stats) {
  std::ostringstream out;
  out << "dialogs: " << stats.dialogs << "  segments: " << stats.segments << " (user " << stats.user_segments
      << ", system " << stats.system_segments << ")\n";
  const auto table = [&](const char* title, const std::vector<LabelCount>& rows) {
    out << '\n' << title << '\n';
    out << std::left << std::setw(20) << "Label" << std::right << std::setw(9) << "User" << std::setw(9) << "System"
        << std::setw(9) << "Total" << std::setw(9) << "%" << '\n';
    for (const auto& row : rows) {
      // setw counts bytes; pad by code points so accented names line up.
      std::size_t width = 0;
      for (unsigned char c : row.name) width += (c & 0xC0) != 0x80;
      out << row.name << std::string(width < 20 ? 20 - width : 1, ' ') << std::setw(9) << row.user << std::setw(9)
          << row.system << std::setw(9) << row.total << std::setw(9) << std::fixed << std::setprecision(1)
          << row.percent_of_segments << '\n';
    }
  };
  table("Level 1", stats.l1);
  table("Level 2", stats.l2);
  table("Level 3", stats.l3);
  return out.str();
}

std::vector<std::string> FoldAssignment::dialogs_in(int fold) const {
  std::vector<std::string> ids;
  for (const auto& [id, f] : fold_of_dialog) {
    if (f == fold) ids.push_back(id);
  }
  return ids;
}

FoldAssignment make_folds(const Corpus& corpus, int k, std::uint64_t seed) {
  if (k < 2) throw DataError("fold count must be at least 2");
  if (corpus.dialogs.size() < static_cast<std::size_t>(k)) {
    throw DataError("too few dialogs (" + std::to_string(corpus.dialogs.size()) + ") for " + std::to_string(k) + " folds");
  }
  std::vector<std::size_t> order(corpus.dialogs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  RandomSource rng(derive_seed(seed, 0xF01D));
  rng.shuffle(std::span<std::size_t>(order));
  FoldAssignment folds{k, seed, {}};
  for (std::size_t i = 0; i < order.size(); ++i) {
    folds.fold_of_dialog[corpus.dialogs[order[i]].id] = static_cast<int>(i % static_cast<std::size_t>(k));
  }
  return folds;
}

nlohmann::json to_json(const FoldAssignment& folds) {
  return nlohmann::json{{"k", folds.k}, {"seed", folds.seed}, {"fold_of_dialog", folds.fold_of_dialog}};
}

FoldAssignment fold_assignment_from_json(const nlohmann::json& json) {
  try {
    FoldAssignment folds;
    folds.k = json.at("k").get<int>();
    folds.seed = json.at("seed").get<std::uint64_t>();
    folds.fold_of_dialog = json.at("fold_of_dialog").get<std::map<std::string, int>>();
    for (const auto& [id, fold] : folds.fold_of_dialog) {
      if (fold < 0 || fold >= folds.k) throw DataError("fold index out of range for dialog '" + id + "'");
    }
    return folds;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("fold assignment JSON: ") + e.what());
  }
}

TrainValSplit split_train_val(const std::vector<std::string>& dialog_ids, double val_fraction, std::uint64_t seed) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw DataError("validation fraction must be in (0, 1)");
  const std::size_t n = dialog_ids.size();
  if (n < 2) throw DataError("need at least 2 dialogs to split train/validation");
  auto val_count = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  val_count = std::clamp<std::size_t>(val_count, 1, n - 1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  RandomSource rng(derive_seed(seed, 0x5A1));
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<bool> is_val(n, false);
  for (std::size_t i = 0; i < val_count; ++i) is_val[order[i]] = true;
  TrainValSplit split;
  for (std::size_t i = 0; i < n; ++i) (is_val[i] ? split.val : split.train).push_back(dialog_ids[i]);
  return split;
}

}  // namespace diact
