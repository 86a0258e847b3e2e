#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace diact {

enum class Level { L1 = 1, L2 = 2, L3 = 3 };

enum class Speaker { User, System };

std::string_view to_string(Level level);
std::string_view to_string(Speaker speaker);
Level parse_level(std::string_view text);
Speaker parse_speaker(std::string_view text);

struct Label {
  Level level;
  std::string name;
  int index;
};

// The three label inventories of the annotation scheme. Nil is not a member
// of any inventory: at L2/L3 it is the empty label set.
class LabelSpace {
 public:
  static const LabelSpace& canonical();

  std::span<const Label> labels(Level level) const;
  std::size_t size(Level level) const { return labels(level).size(); }
  const Label& at(Level level, int index) const;
  std::string_view name(Level level, int index) const { return at(level, index).name; }

  // Accepts canonical Spanish names and their English translations.
  std::optional<int> find(Level level, std::string_view name) const;
  int index_of(Level level, std::string_view name) const;  // throws DataError

  // Structuring labels: segments carrying one of these at L1 have no L2/L3.
  bool is_gate(int l1_index) const;
  std::span<const int> gate_labels() const { return gate_; }

 private:
  LabelSpace();

  std::vector<Label> l1_;
  std::vector<Label> l2_;
  std::vector<Label> l3_;
  std::vector<int> gate_;
  std::vector<std::vector<std::pair<std::string, int>>> aliases_;  // per level
};

// Canonical L1 indices referenced by the generator and the tests.
namespace l1 {
inline constexpr int kPregunta = 0;
inline constexpr int kRespuesta = 1;
inline constexpr int kConfirmacion = 2;
inline constexpr int kNuevaConsulta = 3;
inline constexpr int kEspera = 4;
inline constexpr int kCierre = 5;
inline constexpr int kAfirmacion = 6;
inline constexpr int kApertura = 7;
inline constexpr int kNoEntendido = 8;
inline constexpr int kNegacion = 9;
inline constexpr int kIndefinida = 10;
}  // namespace l1

}  // namespace diact
