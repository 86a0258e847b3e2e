#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "diact/labels.hpp"

namespace diact {

// The (L1, L2, L3) annotation of one segment. Empty L2/L3 vectors are Nil.
// Label sets are kept sorted by inventory index.
struct Annotation {
  int l1 = 0;
  std::vector<int> l2;
  std::vector<int> l3;

  const std::vector<int>& set(Level level) const { return level == Level::L2 ? l2 : l3; }
  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct Segment {
  std::string dialog_id;
  int position = 0;
  Speaker speaker = Speaker::User;
  std::string text;
  Annotation labels;

  friend bool operator==(const Segment&, const Segment&) = default;
};

struct Dialog {
  std::string id;
  std::vector<Segment> segments;

  std::vector<Annotation> annotations() const;
  friend bool operator==(const Dialog&, const Dialog&) = default;
};

struct Corpus {
  std::vector<Dialog> dialogs;

  const LabelSpace& label_space() const { return LabelSpace::canonical(); }
  std::size_t segment_count() const;
  friend bool operator==(const Corpus&, const Corpus&) = default;
};

enum class CorpusFormat { Json, Tsv };

CorpusFormat parse_corpus_format(std::string_view text);

// Loading rejects anything validate() would report, so a loaded corpus always
// satisfies the segment and dialog invariants.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);
Corpus parse_corpus_json(const std::string& text);
Corpus parse_corpus_tsv(const std::string& text);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format);
std::string corpus_to_json(const Corpus& corpus);
std::string corpus_to_tsv(const Corpus& corpus);

enum class ViolationKind {
  GateViolation,
  DuplicateLabel,
  UnsortedLabels,
  LabelOutOfRange,
  PositionGap,
  DialogIdMismatch,
  DuplicateDialogId,
  EmptyText,
};

std::string_view to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string dialog_id;
  int position = -1;  // -1 for dialog-level violations
  std::string message;
};

std::vector<Violation> validate(const Corpus& corpus);

struct LabelCount {
  std::string name;  // "Nil" for the empty set at L2/L3
  std::size_t user = 0;
  std::size_t system = 0;
  std::size_t total = 0;
  double percent_of_segments = 0.0;
  double percent_of_occurrences = 0.0;
};

struct CorpusStats {
  std::size_t dialogs = 0;
  std::size_t segments = 0;
  std::size_t user_segments = 0;
  std::size_t system_segments = 0;
  std::vector<LabelCount> l1;  // inventory order
  std::vector<LabelCount> l2;  // Nil first, then inventory order
  std::vector<LabelCount> l3;
};

CorpusStats corpus_stats(const Corpus& corpus);
std::string format_stats(const CorpusStats& stats);

struct FoldAssignment {
  int k = 5;
  std::uint64_t seed = 0;
  std::map<std::string, int> fold_of_dialog;

  std::vector<std::string> dialogs_in(int fold) const;
  friend bool operator==(const FoldAssignment&, const FoldAssignment&) = default;
};

FoldAssignment make_folds(const Corpus& corpus, int k, std::uint64_t seed);
nlohmann::json to_json(const FoldAssignment& folds);
FoldAssignment fold_assignment_from_json(const nlohmann::json& json);

struct TrainValSplit {
  std::vector<std::string> train;
  std::vector<std::string> val;
};

// Both halves keep the relative order of the input ids.
TrainValSplit split_train_val(const std::vector<std::string>& dialog_ids, double val_fraction,
                              std::uint64_t seed);

}  // namespace diact
