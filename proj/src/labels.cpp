#include "diact/labels.hpp"

#include <algorithm>
#include <cctype>

#include "diact/error.hpp"

namespace diact {
namespace {

struct NamedLabel {
  const char* spanish;
  const char* english;
};

// Inventory order follows the corpus distribution tables (most frequent first).
constexpr std::array<NamedLabel, 11> kL1 = {{
    {"Pregunta", "Question"},
    {"Respuesta", "Answer"},
    {"Confirmación", "Confirmation"},
    {"Nueva Consulta", "New Consult"},
    {"Espera", "Waiting"},
    {"Cierre", "Closing"},
    {"Afirmación", "Acceptance"},
    {"Apertura", "Opening"},
    {"No Entendido", "Not Understood"},
    {"Negación", "Rejection"},
    {"Indefinida", "Undefined"},
}};

constexpr std::array<NamedLabel, 10> kL2 = {{
    {"Hora Salida", "Departure Time"},
    {"Precio", "Fare"},
    {"Día", "Day"},
    {"Origen", "Origin"},
    {"Destino", "Destination"},
    {"Tipo Tren", "Train Type"},
    {"Hora Llegada", "Arrival Time"},
    {"Tiempo Recorrido", "Duration"},
    {"Clase Billete", "Ticket Class"},
    {"Servicio", "Service"},
}};

constexpr std::array<NamedLabel, 13> kL3 = {{
    {"Destino", "Destination"},
    {"Día", "Day"},
    {"Origen", "Origin"},
    {"Hora Salida", "Departure Time"},
    {"Número Trenes", "Number of Trains"},
    {"Tipo Tren", "Train Type"},
    {"Número Orden", "Order Number"},
    {"Clase Billete", "Ticket Class"},
    {"Precio", "Fare"},
    {"Hora Llegada", "Arrival Time"},
    {"Tipo Viaje", "Trip Type"},
    {"Servicio", "Service"},
    {"Tiempo Recorrido", "Duration"},
}};

template <std::size_t N>
void fill(Level level, const std::array<NamedLabel, N>& source, std::vector<Label>& labels,
          std::vector<std::pair<std::string, int>>& aliases) {
  for (std::size_t i = 0; i < N; ++i) {
    labels.push_back(Label{level, source[i].spanish, static_cast<int>(i)});
    aliases.emplace_back(source[i].spanish, static_cast<int>(i));
    aliases.emplace_back(source[i].english, static_cast<int>(i));
  }
}

std::size_t slot(Level level) { return static_cast<std::size_t>(level) - 1; }

std::string lower_ascii(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(Level level) {
  switch (level) {
    case Level::L1: return "L1";
    case Level::L2: return "L2";
    case Level::L3: return "L3";
  }
  return "?";
}

std::string_view to_string(Speaker speaker) {
  return speaker == Speaker::User ? "user" : "system";
}

Level parse_level(std::string_view text) {
  const auto lowered = lower_ascii(text);
  if (lowered == "l1" || lowered == "1") return Level::L1;
  if (lowered == "l2" || lowered == "2") return Level::L2;
  if (lowered == "l3" || lowered == "3") return Level::L3;
  throw DataError("unknown level '" + std::string(text) + "'");
}

Speaker parse_speaker(std::string_view text) {
  const auto lowered = lower_ascii(text);
  if (lowered == "user") return Speaker::User;
  if (lowered == "system") return Speaker::System;
  throw DataError("unknown speaker '" + std::string(text) + "'");
}

LabelSpace::LabelSpace() : aliases_(3) {
  fill(Level::L1, kL1, l1_, aliases_[0]);
  fill(Level::L2, kL2, l2_, aliases_[1]);
  fill(Level::L3, kL3, l3_, aliases_[2]);
  gate_ = {l1::kApertura, l1::kCierre, l1::kIndefinida,
           l1::kNoEntendido, l1::kEspera, l1::kNuevaConsulta};
  std::sort(gate_.begin(), gate_.end());
}

const LabelSpace& LabelSpace::canonical() {
  static const LabelSpace space;
  return space;
}

std::span<const Label> LabelSpace::labels(Level level) const {
  switch (level) {
    case Level::L1: return l1_;
    case Level::L2: return l2_;
    case Level::L3: return l3_;
  }
  return {};
}

const Label& LabelSpace::at(Level level, int index) const {
  const auto inventory = labels(level);
  if (index < 0 || static_cast<std::size_t>(index) >= inventory.size()) {
    throw DataError("label index " + std::to_string(index) + " out of range for " +
                    std::string(to_string(level)));
  }
  return inventory[static_cast<std::size_t>(index)];
}

std::optional<int> LabelSpace::find(Level level, std::string_view name) const {
  for (const auto& [alias, index] : aliases_[slot(level)]) {
    if (alias == name) return index;
  }
  return std::nullopt;
}

int LabelSpace::index_of(Level level, std::string_view name) const {
  if (auto index = find(level, name)) return *index;
  throw DataError("unknown " + std::string(to_string(level)) + " label '" + std::string(name) + "'");
}

bool LabelSpace::is_gate(int l1_index) const {
  return std::binary_search(gate_.begin(), gate_.end(), l1_index);
}

}  // namespace diact
