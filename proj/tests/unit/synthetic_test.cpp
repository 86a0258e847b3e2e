#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "diact/error.hpp"
#include "diact/synthetic.hpp"
#include "diact/text.hpp"

namespace diact {
namespace {

TEST(Synthetic, DefaultsValidateAndDeterminism) {
  auto config = SyntheticConfig::defaults();
  config.dialogs = 100;
  const auto a = generate_synthetic(config, 7);
  EXPECT_EQ(a.dialogs.size(), 100u);
  EXPECT_TRUE(validate(a).empty());
  EXPECT_EQ(corpus_to_json(a), corpus_to_json(generate_synthetic(config, 7)));
  EXPECT_NE(corpus_to_json(a), corpus_to_json(generate_synthetic(config, 8)));
}

TEST(Synthetic, L1MarginalsFollowTheConfiguredTable) {
  auto config = SyntheticConfig::defaults();
  config.dialogs = 900;
  const auto corpus = generate_synthetic(config, 1);
  const auto stats = corpus_stats(corpus);
  double total_weight = 0.0;
  for (double w : config.l1_weights) total_weight += w;
  for (std::size_t i = 0; i < config.l1_weights.size(); ++i) {
    EXPECT_NEAR(stats.l1[i].percent_of_segments, 100.0 * config.l1_weights[i] / total_weight, 3.0)
        << stats.l1[i].name;
  }
}

TEST(Synthetic, GateOnlyConfigurationHasNoL2OrL3) {
  auto config = SyntheticConfig::defaults();
  config.dialogs = 30;
  const auto& space = LabelSpace::canonical();
  for (std::size_t i = 0; i < config.l1_weights.size(); ++i) {
    if (!space.is_gate(static_cast<int>(i))) config.l1_weights[i] = 0.0;
  }
  for (const auto& d : generate_synthetic(config, 3).dialogs) {
    for (const auto& s : d.segments) {
      EXPECT_TRUE(space.is_gate(s.labels.l1));
      EXPECT_TRUE(s.labels.l2.empty());
      EXPECT_TRUE(s.labels.l3.empty());
    }
  }
}

// Recovering every L2/L3 label from trigger words is what makes the corpus
// learnable: each label's triggers must occur in its segments' tokens.
TEST(Synthetic, LabelsAreRecoverableFromTriggers) {
  auto config = SyntheticConfig::defaults();
  config.dialogs = 50;
  const auto corpus = generate_synthetic(config, 11);
  const auto contains_trigger = [](const std::vector<std::string>& tokens, const std::vector<std::string>& triggers) {
    std::set<std::string> present(tokens.begin(), tokens.end());
    for (const auto& trigger : triggers) {
      bool all = true;
      for (const auto& word : tokenize(trigger)) all = all && present.count(word);
      if (all) return true;
    }
    return false;
  };
  for (const auto& d : corpus.dialogs) {
    for (const auto& s : d.segments) {
      const auto tokens = tokenize(s.text);
      ASSERT_FALSE(tokens.empty());
      for (int label : s.labels.l2) {
        EXPECT_TRUE(contains_trigger(tokens, config.lexicon.l2_triggers[static_cast<std::size_t>(label)])) << s.text;
      }
      for (int label : s.labels.l3) {
        EXPECT_TRUE(contains_trigger(tokens, config.lexicon.l3_triggers[static_cast<std::size_t>(label)])) << s.text;
      }
    }
  }
}

TEST(Synthetic, QuestionAnswerPairsCopyL2) {
  auto config = SyntheticConfig::defaults();
  config.dialogs = 60;
  config.qa_pair_probability = 1.0;
  const auto corpus = generate_synthetic(config, 5);
  int pairs = 0;
  for (const auto& d : corpus.dialogs) {
    for (std::size_t i = 1; i < d.segments.size(); ++i) {
      const auto& prev = d.segments[i - 1].labels;
      const auto& cur = d.segments[i].labels;
      if (prev.l1 == l1::kPregunta && !prev.l2.empty()) {
        EXPECT_EQ(cur.l1, l1::kRespuesta);
        ++pairs;
        EXPECT_EQ(cur.l2, prev.l2);
      }
    }
  }
  EXPECT_GT(pairs, 50);
}

TEST(Synthetic, ConfigErrors) {
  auto config = SyntheticConfig::defaults();
  config.dialogs = 0;
  EXPECT_THROW(config.validate(), DataError);

  auto json = SyntheticConfig::defaults().to_json();
  json["lexicon"]["l2"].erase("Precio");
  try {
    (void)SyntheticConfig::from_json(json);
    ADD_FAILURE() << "missing lexicon entry accepted";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("Precio"), std::string::npos) << e.what();
  }
}

TEST(Synthetic, JsonRoundTripKeepsGenerator) {
  auto config = SyntheticConfig::defaults();
  config.dialogs = 5;
  const auto restored = SyntheticConfig::from_json(config.to_json());
  EXPECT_EQ(corpus_to_json(generate_synthetic(restored, 2)), corpus_to_json(generate_synthetic(config, 2)));
}

}  // namespace
}  // namespace diact
