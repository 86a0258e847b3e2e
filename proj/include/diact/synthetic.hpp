#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "diact/corpus.hpp"

namespace diact {

// Surface vocabulary of the generator. Every L1 label owns a set of segment
// templates and every L2/L3 label owns trigger words; the generator builds
// each segment from its labels' entries, so labels are recoverable from text.
struct SyntheticLexicon {
  std::vector<std::vector<std::string>> l1_templates;  // indexed by L1 label
  std::vector<std::vector<std::string>> l2_triggers;   // indexed by L2 label
  std::vector<std::vector<std::string>> l3_triggers;   // indexed by L3 label
  std::vector<std::string> replies;                    // context-dependent short replies
  std::vector<std::string> fillers;
};

struct SyntheticConfig {
  int dialogs = 200;
  double mean_segments = 26.0;

  // Label marginals (unnormalized) and the user share of each L1 label.
  std::vector<double> l1_weights;
  std::vector<double> l1_user_share;
  std::vector<double> l2_weights;
  std::vector<double> l3_weights;

  // Applied to non-gate segments only.
  double l2_nil_probability = 0.055;
  double l3_nil_probability = 0.21;
  double l2_extra_label_probability = 0.04;
  double l3_extra_label_probability = 0.4;

  // After a question, probability that the next segment is an answer whose L2
  // set is copied from the question and whose text carries no L2 triggers.
  double qa_pair_probability = 0.0;
  // After a question or confirmation, probability of a bare reply whose L1
  // (answer vs. acceptance) and L2 are determined only by the preceding segment.
  double ambiguous_reply_probability = 0.0;

  int max_fillers = 2;
  SyntheticLexicon lexicon;

  // Corpus distribution tables and the built-in lexicon.
  static SyntheticConfig defaults();
  // Fields absent from `json` keep their default values. A lexicon level that
  // is present must cover every label of that level.
  static SyntheticConfig from_json(const nlohmann::json& json);
  nlohmann::json to_json() const;

  // Throws DataError naming the offending label or field.
  void validate() const;
};

Corpus generate_synthetic(const SyntheticConfig& config, std::uint64_t seed);

}  // namespace diact
