#include <gtest/gtest.h>

#include "diact/checkpoint.hpp"
#include "diact/error.hpp"
#include "diact/pipeline.hpp"
#include "diact/synthetic.hpp"
#include "model_support.hpp"
#include "support.hpp"

namespace diact::model {
namespace {

using testing::small_config;
using testing::small_embeddings;

void set_head_bias(LevelClassifier& classifier, const std::vector<double>& bias) {
  for (auto* p : classifier.all_parameters()) {
    if (p->name == "head.weights") p->value.fill(0.0);
    if (p->name == "head.bias") std::copy(bias.begin(), bias.end(), p->value.values().begin());
  }
}

std::vector<const Dialog*> pointers(const Corpus& corpus) {
  std::vector<const Dialog*> out;
  for (const auto& d : corpus.dialogs) out.push_back(&d);
  return out;
}

TEST(SegmentTokens, PunctuationOnlyFallsBackToUnk) {
  const auto vocab = build_vocab(testing::example_dialog());
  const auto s = testing::segment("d", 0, Speaker::User, "¿?", l1::kPregunta);
  EXPECT_EQ(segment_tokens(s, vocab, 60), std::vector<int>{Vocabulary::kUnk});
}

TEST(BuildExamples, GateSegmentsOnlyEnterL1AndCombined) {
  const auto corpus = testing::example_dialog();
  const auto vocab = build_vocab(corpus);
  const auto dialogs = pointers(corpus);
  const auto l1 = build_examples(dialogs, default_l1_config(), vocab, 60);
  const auto l2 = build_examples(dialogs, default_l2_config(), vocab, 60);
  const auto l3 = build_examples(dialogs, default_l3_config(), vocab, 60);
  EXPECT_EQ(l1.examples.size(), 18u);
  // Apertura, Espera, Nueva Consulta x2 and Cierre x2 are gate segments.
  EXPECT_EQ(l2.examples.size(), 12u);
  EXPECT_EQ(l3.examples.size(), 12u);
  for (const auto* s : l2.sources) EXPECT_FALSE(LabelSpace::canonical().is_gate(s->labels.l1));
  EXPECT_EQ(l2.examples[0].context.size(), 52u);
  EXPECT_EQ(l1.examples[0].target[l1::kApertura], 1.0);

  const auto inventory = build_combined_inventory(dialogs, 3);
  const auto combined = build_examples(dialogs, default_combined_config(), vocab, 60, &inventory);
  EXPECT_EQ(combined.examples.size(), 18u);
  EXPECT_EQ(combined.examples[0].target.size(), static_cast<std::size_t>(inventory.size()));
}

TEST(CombinedInventory, ClassesProjectionAndLookup) {
  const auto corpus = testing::example_dialog();
  const auto dialogs = pointers(corpus);
  const auto three = build_combined_inventory(dialogs, 3);
  const auto two = build_combined_inventory(dialogs, 2);
  // Hand count of distinct (L1, L2, L3) triples and (L1, L2) pairs in the figure dialog.
  EXPECT_EQ(three.size(), 15);
  EXPECT_EQ(two.size(), 12);
  EXPECT_TRUE(std::is_sorted(three.classes().begin(), three.classes().end(), annotation_less));
  for (const auto& s : corpus.dialogs[0].segments) {
    EXPECT_EQ(three.at(three.index_of(s.labels)), s.labels);
    EXPECT_TRUE(two.at(two.index_of(s.labels)).l3.empty());
  }
  Annotation unseen{l1::kPregunta, {testing::l2("Servicio")}, {}};
  EXPECT_EQ(three.index_of(unseen), -1);
  const auto restored = CombinedInventory::from_json(three.to_json());
  EXPECT_EQ(restored.classes(), three.classes());
  EXPECT_THROW(CombinedInventory(4, {}), DataError);
}

TEST(BuildExamples, UnseenCombinationIsDataError) {
  const auto corpus = testing::example_dialog();
  const auto vocab = build_vocab(corpus);
  const CombinedInventory tiny(3, {corpus.dialogs[0].segments[0].labels});
  EXPECT_THROW(build_examples(pointers(corpus), default_combined_config(), vocab, 60, &tiny), DataError);
}

struct Pipeline {
  Pipeline(std::size_t vocabulary, const std::vector<double>& l1_bias) {
    const auto table = small_embeddings(static_cast<int>(vocabulary), 6, 1);
    auto c1 = small_config(Task::L1, EncoderVariant::Cnn, {3, 4, 5});
    c1.context.n_prev = 3;
    auto c2 = small_config(Task::L2, EncoderVariant::Cnn);
    c2.context = ContextConfig{3, {UpperContext{Level::L1, true, 1}}};
    auto c3 = small_config(Task::L3, EncoderVariant::Cnn);
    c3.context = ContextConfig{0, {UpperContext{Level::L2, true, 0}}};
    auto a = std::make_shared<LevelClassifier>(c1, table, 11, 2);
    auto b = std::make_shared<LevelClassifier>(c2, table, 10, 3);
    auto c = std::make_shared<LevelClassifier>(c3, table, 13, 4);
    if (!l1_bias.empty()) set_head_bias(*a, l1_bias);
    set_head_bias(*b, std::vector<double>(10, 10.0));
    set_head_bias(*c, std::vector<double>(13, 10.0));
    pipeline = {a, b, c};
  }
  HierarchicalPipeline pipeline;
};

TEST(Hierarchical, GateLabelForcesNilWhateverTheText) {
  const auto corpus = testing::example_dialog();
  const auto vocab = build_vocab(corpus);
  std::vector<double> bias(11, 0.0);
  bias[l1::kEspera] = 20.0;
  const Pipeline p(static_cast<std::size_t>(vocab.size()), bias);
  for (auto source : {ContextSource::Gold, ContextSource::Predicted}) {
    const auto out = hierarchical_predict(p.pipeline, corpus.dialogs[0], vocab, 60, source);
    ASSERT_EQ(out.size(), 18u);
    for (const auto& s : out) {
      EXPECT_EQ(s.labels.l1, l1::kEspera);
      EXPECT_TRUE(s.labels.l2.empty());
      EXPECT_TRUE(s.labels.l3.empty());
      EXPECT_TRUE(s.l2_probabilities.empty());
    }
  }
}

TEST(Hierarchical, NonGateLabelRunsLowerLevels) {
  const auto corpus = testing::example_dialog();
  const auto vocab = build_vocab(corpus);
  std::vector<double> bias(11, 0.0);
  bias[l1::kPregunta] = 20.0;
  const Pipeline p(static_cast<std::size_t>(vocab.size()), bias);
  const auto out = hierarchical_predict(p.pipeline, corpus.dialogs[0], vocab, 60, ContextSource::Predicted);
  for (const auto& s : out) {
    EXPECT_EQ(s.labels.l1, l1::kPregunta);
    EXPECT_EQ(s.labels.l2.size(), 10u);
    EXPECT_EQ(s.labels.l3.size(), 13u);
  }
}

TEST(Hierarchical, GateInvariantOnRandomPipelines) {
  auto config = SyntheticConfig::defaults();
  config.dialogs = 20;
  const auto corpus = generate_synthetic(config, 3);
  const auto vocab = build_vocab(corpus);
  const auto& space = LabelSpace::canonical();
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    RandomSource rng(seed);
    std::vector<double> bias(11);
    for (double& b : bias) b = rng.uniform(-1.0, 1.0);
    const Pipeline p(static_cast<std::size_t>(vocab.size()), bias);
    for (const auto& d : corpus.dialogs) {
      for (const auto& s : hierarchical_predict(p.pipeline, d, vocab, 60, ContextSource::Predicted)) {
        if (space.is_gate(s.labels.l1)) {
          EXPECT_TRUE(s.labels.l2.empty());
          EXPECT_TRUE(s.labels.l3.empty());
        }
      }
    }
  }
}

TEST(Hierarchical, MissingOrMisorderedLevelsFail) {
  const auto corpus = testing::example_dialog();
  const auto vocab = build_vocab(corpus);
  Pipeline p(static_cast<std::size_t>(vocab.size()), {});
  auto broken = p.pipeline;
  broken.l3.reset();
  EXPECT_THROW(hierarchical_predict(broken, corpus.dialogs[0], vocab, 60), RuntimeFailure);
  std::swap(p.pipeline.l2, p.pipeline.l3);
  EXPECT_THROW(hierarchical_predict(p.pipeline, corpus.dialogs[0], vocab, 60), RuntimeFailure);
}

TEST(Combined, SingleCombinationCorpusIsExact) {
  Corpus corpus;
  Dialog d;
  d.id = "one";
  for (int i = 0; i < 4; ++i) {
    d.segments.push_back(testing::segment("one", i, Speaker::User, "de bilbao", l1::kRespuesta,
                                          {testing::l2("Hora Salida")}, {testing::l3("Origen")}));
  }
  corpus.dialogs.push_back(d);
  const auto vocab = build_vocab(corpus);
  const auto dialogs = pointers(corpus);
  const auto inventory = build_combined_inventory(dialogs, 3);
  ASSERT_EQ(inventory.size(), 1);
  const auto table = small_embeddings(vocab.size(), 6, 5);
  auto config = small_config(Task::Combined, EncoderVariant::Cnn, {3, 4, 5});
  const LevelClassifier classifier(config, table, inventory.size(), 6);
  for (const auto& s : combined_predict(classifier, inventory, corpus.dialogs[0], vocab, 60)) {
    EXPECT_EQ(s.labels, corpus.dialogs[0].segments[0].labels);
  }
}

TEST(Checkpoint, RoundTripIsBitExact) {
  testing::TempDir dir("checkpoint");
  const auto corpus = testing::example_dialog();
  const auto vocab = build_vocab(corpus);
  const auto table = small_embeddings(vocab.size(), 6, 7);
  for (auto variant : {EncoderVariant::Cnn, EncoderVariant::Rnn}) {
    auto config = small_config(Task::L2, variant);
    config.context = ContextConfig{1, {UpperContext{Level::L1, true, 0}}};
    LevelClassifier classifier(config, table, 10, 8);
    RandomSource rng(9);
    for (auto* p : classifier.all_parameters()) {
      for (auto& v : p->value.values()) v = rng.uniform(-1.0, 1.0) * 1e-3 / 3.0;
    }
    const auto stem = dir.path() / "model";
    save_checkpoint(stem, classifier, vocab, 40, nullptr, {{"note", "x"}});
    const auto loaded = load_checkpoint(stem);
    EXPECT_EQ(loaded.classifier->config(), classifier.config());
    EXPECT_EQ(loaded.vocabulary, vocab);
    EXPECT_EQ(loaded.max_len, 40);
    EXPECT_EQ(loaded.extra.at("note"), "x");
    const auto a = classifier.all_parameters();
    const auto b = std::as_const(*loaded.classifier).all_parameters();
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      EXPECT_EQ(a[i]->name, b[i]->name);
      EXPECT_EQ(a[i]->value, b[i]->value) << a[i]->name;
    }
  }
}

TEST(Checkpoint, CombinedInventoryAndCorruptFiles) {
  testing::TempDir dir("checkpoint-combined");
  const auto corpus = testing::example_dialog();
  const auto vocab = build_vocab(corpus);
  const auto inventory = build_combined_inventory(pointers(corpus), 2);
  const auto table = small_embeddings(vocab.size(), 6, 10);
  LevelClassifier classifier(small_config(Task::Combined, EncoderVariant::Cnn), table, inventory.size(), 11);
  const auto stem = dir.path() / "combined";
  save_checkpoint(stem, classifier, vocab, 60, &inventory);
  const auto loaded = load_checkpoint(stem);
  ASSERT_TRUE(loaded.inventory.has_value());
  EXPECT_EQ(loaded.inventory->classes(), inventory.classes());
  EXPECT_EQ(loaded.inventory->levels(), 2);

  std::filesystem::resize_file(blob_path(stem), 16);
  EXPECT_THROW(load_checkpoint(stem), DataError);
  EXPECT_THROW(load_checkpoint(dir.path() / "absent"), DataError);
}

}  // namespace
}  // namespace diact::model
