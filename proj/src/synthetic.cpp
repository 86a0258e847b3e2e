#include "diact/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "diact/error.hpp"
#include "diact/random.hpp"
#include "diact/text.hpp"

namespace diact {
namespace {

using Strings = std::vector<std::string>;

// Corpus distribution tables: L1 totals with user counts, L2/L3 totals.
constexpr double kL1Total[] = {6338, 4285, 3629, 2474, 1948, 1827, 990, 900, 657, 340, 159};
constexpr double kL1User[] = {5474, 1839, 0, 0, 0, 927, 990, 0, 4, 340, 141};
constexpr double kL2Total[] = {7432, 3338, 1949, 957, 852, 543, 178, 29, 27, 8};
constexpr double kL3Total[] = {3710, 3659, 2981, 2325, 1863, 1797, 1034, 895, 778, 689, 643, 19, 14};

SyntheticLexicon default_lexicon() {
  SyntheticLexicon lex;
  lex.l1_templates = {
      {"quería saber", "me puede decir", "quisiera consultar"},        // Pregunta
      {"le informo", "resulta", "efectivamente hay"},                  // Respuesta
      {"quiere usted", "confirma", "entonces busca"},                  // Confirmación
      {"desea algo más", "necesita otra consulta"},                    // Nueva Consulta
      {"un momento por favor", "espere un instante"},                  // Espera
      {"gracias adiós", "hasta luego", "feliz viaje"},                 // Cierre
      {"sí", "sí claro", "correcto"},                                  // Afirmación
      {"bienvenido al servicio", "buenos días puedo ayudarle"},        // Apertura
      {"perdone repita", "disculpe cómo dice"},                        // No Entendido
      {"no", "no señor", "negativo"},                                  // Negación
      {"eh", "mmm bueno", "pues"},                                     // Indefinida
  };
  lex.l2_triggers = {{"horarios", "salen"}, {"cuesta", "importe"}, {"fecha"}, {"procedencia"}, {"adónde"},
                     {"categoría"},         {"llegada"},           {"tarda"}, {"clases"},      {"servicios"}};
  lex.l3_triggers = {{"coruña", "valencia"}, {"lunes", "viernes"}, {"bilbao", "sevilla"}, {"nueve", "mañana"},
                     {"único", "varios"},    {"talgo", "diurno"},   {"primero"},           {"turista"},
                     {"euros"},              {"llega"},             {"vuelta"},            {"cafetería"},
                     {"horas"}};
  lex.replies = {"vale"};
  lex.fillers = {"el", "la", "de", "para", "los", "tren"};
  return lex;
}

std::vector<double> read_weights(const nlohmann::json& json, Level level, std::size_t size) {
  if (!json.is_object()) throw DataError(std::string(to_string(level)) + " weights must be an object");
  std::vector<double> weights(size, 0.0);
  for (const auto& [name, value] : json.items()) {
    const int index = LabelSpace::canonical().index_of(level, name);
    weights[static_cast<std::size_t>(index)] = value.get<double>();
  }
  return weights;
}

std::vector<Strings> read_lexicon_level(const nlohmann::json& json, Level level) {
  const auto& space = LabelSpace::canonical();
  std::vector<Strings> entries(space.size(level));
  std::vector<bool> present(space.size(level), false);
  for (const auto& [name, value] : json.items()) {
    const int index = space.index_of(level, name);
    entries[static_cast<std::size_t>(index)] = value.get<Strings>();
    present[static_cast<std::size_t>(index)] = true;
  }
  for (std::size_t i = 0; i < present.size(); ++i) {
    if (!present[i]) {
      throw DataError("lexicon missing " + std::string(to_string(level)) + " label '" +
                      std::string(space.name(level, static_cast<int>(i))) + "'");
    }
  }
  return entries;
}

nlohmann::json lexicon_level_json(const std::vector<Strings>& entries, Level level) {
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    out[std::string(LabelSpace::canonical().name(level, static_cast<int>(i)))] = entries[i];
  }
  return out;
}

nlohmann::json weights_json(const std::vector<double>& weights, Level level) {
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out[std::string(LabelSpace::canonical().name(level, static_cast<int>(i)))] = weights[i];
  }
  return out;
}

void check_probability(double p, const char* field) {
  if (!(p >= 0.0 && p <= 1.0)) throw DataError(std::string("synthetic config: ") + field + " must be in [0, 1]");
}

void check_weights(const std::vector<double>& weights, std::size_t size, const char* field) {
  if (weights.size() != size) throw DataError(std::string("synthetic config: ") + field + " has wrong length");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw DataError(std::string("synthetic config: negative weight in ") + field);
    total += w;
  }
  if (total <= 0.0) throw DataError(std::string("synthetic config: ") + field + " are all zero");
}

// Draws a label set: one label by weight, then further distinct labels while
// the continuation coin comes up.
std::vector<int> draw_label_set(RandomSource& rng, const std::vector<double>& weights, double extra) {
  std::vector<double> remaining = weights;
  std::vector<int> set;
  do {
    const auto index = rng.weighted_index(remaining);
    set.push_back(static_cast<int>(index));
    remaining[index] = 0.0;
  } while (std::any_of(remaining.begin(), remaining.end(), [](double w) { return w > 0.0; }) && rng.bernoulli(extra));
  std::sort(set.begin(), set.end());
  return set;
}

const std::string& pick(RandomSource& rng, const Strings& options) {
  return options[static_cast<std::size_t>(rng.uniform_index(options.size()))];
}

}  // namespace

SyntheticConfig SyntheticConfig::defaults() {
  SyntheticConfig config;
  config.l1_weights.assign(std::begin(kL1Total), std::end(kL1Total));
  for (std::size_t i = 0; i < std::size(kL1Total); ++i) config.l1_user_share.push_back(kL1User[i] / kL1Total[i]);
  config.l2_weights.assign(std::begin(kL2Total), std::end(kL2Total));
  config.l3_weights.assign(std::begin(kL3Total), std::end(kL3Total));
  config.lexicon = default_lexicon();
  return config;
}

SyntheticConfig SyntheticConfig::from_json(const nlohmann::json& json) {
  SyntheticConfig config = defaults();
  if (!json.is_object()) throw DataError("synthetic config must be a JSON object");
  try {
    for (const auto& [key, value] : json.items()) {
      if (key == "dialogs") config.dialogs = value.get<int>();
      else if (key == "mean_segments") config.mean_segments = value.get<double>();
      else if (key == "l1_weights") config.l1_weights = read_weights(value, Level::L1, 11);
      else if (key == "l2_weights") config.l2_weights = read_weights(value, Level::L2, 10);
      else if (key == "l3_weights") config.l3_weights = read_weights(value, Level::L3, 13);
      else if (key == "l1_user_share") {
        auto overrides = read_weights(value, Level::L1, 11);
        for (const auto& [name, share] : value.items()) {
          const int index = LabelSpace::canonical().index_of(Level::L1, name);
          config.l1_user_share[static_cast<std::size_t>(index)] = overrides[static_cast<std::size_t>(index)];
        }
      } else if (key == "l2_nil_probability") config.l2_nil_probability = value.get<double>();
      else if (key == "l3_nil_probability") config.l3_nil_probability = value.get<double>();
      else if (key == "l2_extra_label_probability") config.l2_extra_label_probability = value.get<double>();
      else if (key == "l3_extra_label_probability") config.l3_extra_label_probability = value.get<double>();
      else if (key == "qa_pair_probability") config.qa_pair_probability = value.get<double>();
      else if (key == "ambiguous_reply_probability") config.ambiguous_reply_probability = value.get<double>();
      else if (key == "max_fillers") config.max_fillers = value.get<int>();
      else if (key == "lexicon") {
        for (const auto& [part, entries] : value.items()) {
          if (part == "l1") config.lexicon.l1_templates = read_lexicon_level(entries, Level::L1);
          else if (part == "l2") config.lexicon.l2_triggers = read_lexicon_level(entries, Level::L2);
          else if (part == "l3") config.lexicon.l3_triggers = read_lexicon_level(entries, Level::L3);
          else if (part == "replies") config.lexicon.replies = entries.get<Strings>();
          else if (part == "fillers") config.lexicon.fillers = entries.get<Strings>();
          else throw DataError("synthetic config: unknown lexicon section '" + part + "'");
        }
      } else {
        throw DataError("synthetic config: unknown field '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("synthetic config: ") + e.what());
  }
  config.validate();
  return config;
}

nlohmann::json SyntheticConfig::to_json() const {
  nlohmann::json user_share = weights_json(l1_user_share, Level::L1);
  return {
      {"dialogs", dialogs},
      {"mean_segments", mean_segments},
      {"l1_weights", weights_json(l1_weights, Level::L1)},
      {"l1_user_share", user_share},
      {"l2_weights", weights_json(l2_weights, Level::L2)},
      {"l3_weights", weights_json(l3_weights, Level::L3)},
      {"l2_nil_probability", l2_nil_probability},
      {"l3_nil_probability", l3_nil_probability},
      {"l2_extra_label_probability", l2_extra_label_probability},
      {"l3_extra_label_probability", l3_extra_label_probability},
      {"qa_pair_probability", qa_pair_probability},
      {"ambiguous_reply_probability", ambiguous_reply_probability},
      {"max_fillers", max_fillers},
      {"lexicon",
       {{"l1", lexicon_level_json(lexicon.l1_templates, Level::L1)},
        {"l2", lexicon_level_json(lexicon.l2_triggers, Level::L2)},
        {"l3", lexicon_level_json(lexicon.l3_triggers, Level::L3)},
        {"replies", lexicon.replies},
        {"fillers", lexicon.fillers}}},
  };
}

void SyntheticConfig::validate() const {
  const auto& space = LabelSpace::canonical();
  if (dialogs < 1) throw DataError("synthetic config: zero dialogs requested");
  if (!(mean_segments >= 1.0)) throw DataError("synthetic config: mean_segments must be at least 1");
  if (max_fillers < 0) throw DataError("synthetic config: max_fillers must be non-negative");
  check_weights(l1_weights, space.size(Level::L1), "l1_weights");
  check_weights(l2_weights, space.size(Level::L2), "l2_weights");
  check_weights(l3_weights, space.size(Level::L3), "l3_weights");
  if (l1_user_share.size() != space.size(Level::L1)) throw DataError("synthetic config: l1_user_share has wrong length");
  for (double share : l1_user_share) check_probability(share, "l1_user_share");
  check_probability(l2_nil_probability, "l2_nil_probability");
  check_probability(l3_nil_probability, "l3_nil_probability");
  check_probability(l2_extra_label_probability, "l2_extra_label_probability");
  check_probability(l3_extra_label_probability, "l3_extra_label_probability");
  check_probability(qa_pair_probability, "qa_pair_probability");
  check_probability(ambiguous_reply_probability, "ambiguous_reply_probability");

  const auto require = [&](const std::vector<Strings>& entries, Level level, const char* what) {
    if (entries.size() != space.size(level)) throw DataError(std::string("synthetic lexicon: wrong number of ") + what);
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const bool usable = std::any_of(entries[i].begin(), entries[i].end(),
                                      [](const std::string& s) { return !tokenize(s).empty(); });
      if (entries[i].empty() || !usable) {
        throw DataError("lexicon missing " + std::string(to_string(level)) + " label '" +
                        std::string(space.name(level, static_cast<int>(i))) + "'");
      }
      for (const auto& entry : entries[i]) {
        if (tokenize(entry).empty()) throw DataError("synthetic lexicon: entry '" + entry + "' has no tokens");
      }
    }
  };
  require(lexicon.l1_templates, Level::L1, "L1 templates");
  require(lexicon.l2_triggers, Level::L2, "L2 triggers");
  require(lexicon.l3_triggers, Level::L3, "L3 triggers");

  std::set<std::vector<std::string>> seen_templates;
  for (const auto& templates : lexicon.l1_templates) {
    for (const auto& entry : templates) {
      if (!seen_templates.insert(tokenize(entry)).second) {
        throw DataError("synthetic lexicon: L1 template '" + entry + "' is not distinct");
      }
    }
  }
  if (ambiguous_reply_probability > 0.0 && lexicon.replies.empty()) {
    throw DataError("synthetic lexicon: ambiguous replies requested but no reply templates given");
  }
}

Corpus generate_synthetic(const SyntheticConfig& config, std::uint64_t seed) {
  config.validate();
  const auto& space = LabelSpace::canonical();
  const auto& lex = config.lexicon;
  RandomSource rng(derive_seed(seed, 0x5e9));

  const auto lo = std::max<long>(1, std::lround(config.mean_segments * 0.5));
  const auto hi = std::max<long>(lo, std::lround(config.mean_segments * 1.5));

  Corpus corpus;
  corpus.dialogs.reserve(static_cast<std::size_t>(config.dialogs));
  for (int d = 0; d < config.dialogs; ++d) {
    char id[32];
    std::snprintf(id, sizeof id, "synth-%04d", d);
    Dialog dialog{id, {}};
    const auto length = lo + static_cast<long>(rng.uniform_index(static_cast<std::uint64_t>(hi - lo + 1)));
    for (long position = 0; position < length; ++position) {
      const Segment* previous = dialog.segments.empty() ? nullptr : &dialog.segments.back();
      Segment segment;
      segment.dialog_id = dialog.id;
      segment.position = static_cast<int>(position);
      Strings words;
      bool l2_from_context = false;

      const bool after_question = previous && previous->labels.l1 == l1::kPregunta && !previous->labels.l2.empty();
      const bool after_confirmation = previous && previous->labels.l1 == l1::kConfirmacion && !previous->labels.l2.empty();
      const auto opposite = [&] { return previous->speaker == Speaker::User ? Speaker::System : Speaker::User; };

      if ((after_question || after_confirmation) && rng.bernoulli(config.ambiguous_reply_probability)) {
        segment.labels.l1 = after_question ? l1::kRespuesta : l1::kAfirmacion;
        segment.speaker = after_question ? opposite() : Speaker::User;
        segment.labels.l2 = previous->labels.l2;
        segment.text = pick(rng, lex.replies);
        dialog.segments.push_back(std::move(segment));
        continue;
      }
      if (after_question && rng.bernoulli(config.qa_pair_probability)) {
        segment.labels.l1 = l1::kRespuesta;
        segment.speaker = opposite();
        segment.labels.l2 = previous->labels.l2;
        l2_from_context = true;
      } else {
        segment.labels.l1 = static_cast<int>(rng.weighted_index(config.l1_weights));
        segment.speaker = rng.bernoulli(config.l1_user_share[static_cast<std::size_t>(segment.labels.l1)])
                              ? Speaker::User
                              : Speaker::System;
      }
      if (!space.is_gate(segment.labels.l1)) {
        if (!l2_from_context && !rng.bernoulli(config.l2_nil_probability)) {
          segment.labels.l2 = draw_label_set(rng, config.l2_weights, config.l2_extra_label_probability);
        }
        if (!rng.bernoulli(config.l3_nil_probability)) {
          segment.labels.l3 = draw_label_set(rng, config.l3_weights, config.l3_extra_label_probability);
        }
      }
      if (!l2_from_context) {
        for (int label : segment.labels.l2) words.push_back(pick(rng, lex.l2_triggers[static_cast<std::size_t>(label)]));
      }
      for (int label : segment.labels.l3) words.push_back(pick(rng, lex.l3_triggers[static_cast<std::size_t>(label)]));
      if (!lex.fillers.empty()) {
        const auto fillers = rng.uniform_index(static_cast<std::uint64_t>(config.max_fillers) + 1);
        for (std::uint64_t f = 0; f < fillers; ++f) words.push_back(pick(rng, lex.fillers));
      }
      rng.shuffle(std::span<std::string>(words));
      segment.text = pick(rng, lex.l1_templates[static_cast<std::size_t>(segment.labels.l1)]);
      for (const auto& word : words) segment.text += " " + word;
      dialog.segments.push_back(std::move(segment));
    }
    corpus.dialogs.push_back(std::move(dialog));
  }
  return corpus;
}

}  // namespace diact
