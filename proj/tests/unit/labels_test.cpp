#include <gtest/gtest.h>

#include "diact/error.hpp"
#include "diact/labels.hpp"

namespace diact {
namespace {

TEST(LabelSpace, InventorySizes) {
  const auto& space = LabelSpace::canonical();
  EXPECT_EQ(space.size(Level::L1), 11u);
  EXPECT_EQ(space.size(Level::L2), 10u);
  EXPECT_EQ(space.size(Level::L3), 13u);
}

TEST(LabelSpace, SixGateLabelsAllAtL1) {
  const auto& space = LabelSpace::canonical();
  ASSERT_EQ(space.gate_labels().size(), 6u);
  for (int g : space.gate_labels()) {
    EXPECT_GE(g, 0);
    EXPECT_LT(g, 11);
    EXPECT_TRUE(space.is_gate(g));
  }
  EXPECT_TRUE(space.is_gate(l1::kEspera));
  EXPECT_TRUE(space.is_gate(l1::kApertura));
  EXPECT_FALSE(space.is_gate(l1::kPregunta));
  EXPECT_FALSE(space.is_gate(l1::kConfirmacion));
}

TEST(LabelSpace, IndicesMatchPositions) {
  const auto& space = LabelSpace::canonical();
  for (Level level : {Level::L1, Level::L2, Level::L3}) {
    const auto labels = space.labels(level);
    for (std::size_t i = 0; i < labels.size(); ++i) {
      EXPECT_EQ(labels[i].index, static_cast<int>(i));
      EXPECT_EQ(labels[i].level, level);
      EXPECT_EQ(space.index_of(level, labels[i].name), static_cast<int>(i));
    }
  }
}

TEST(LabelSpace, EnglishAliasesResolveToCanonicalNames) {
  const auto& space = LabelSpace::canonical();
  EXPECT_EQ(space.index_of(Level::L1, "Question"), l1::kPregunta);
  EXPECT_EQ(space.index_of(Level::L1, "Opening"), l1::kApertura);
  EXPECT_EQ(space.name(Level::L2, space.index_of(Level::L2, "Departure Time")), "Hora Salida");
  EXPECT_EQ(space.name(Level::L3, space.index_of(Level::L3, "Number of Trains")), "Número Trenes");
}

TEST(LabelSpace, UnknownNameIsDataError) {
  const auto& space = LabelSpace::canonical();
  EXPECT_FALSE(space.find(Level::L2, "Nil").has_value());
  EXPECT_THROW(space.index_of(Level::L1, "Saludo"), DataError);
  EXPECT_THROW(space.at(Level::L2, 10), DataError);
}

TEST(LabelSpace, LevelAndSpeakerParsing) {
  EXPECT_EQ(parse_level("L2"), Level::L2);
  EXPECT_EQ(parse_level("3"), Level::L3);
  EXPECT_EQ(parse_speaker("System"), Speaker::System);
  EXPECT_THROW(parse_speaker("operator"), DataError);
}

}  // namespace
}  // namespace diact
