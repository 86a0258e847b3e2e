#include <algorithm>
#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "diact/corpus.hpp"
#include "diact/error.hpp"
#include "diact/synthetic.hpp"
#include "support.hpp"

namespace diact {
namespace {

using testing::example_dialog;
using testing::l2;
using testing::l3;
using testing::segment;

Corpus one_dialog(std::vector<Segment> segments) {
  Corpus corpus;
  Dialog d;
  d.id = segments.empty() ? "d" : segments.front().dialog_id;
  d.segments = std::move(segments);
  corpus.dialogs.push_back(std::move(d));
  return corpus;
}

bool has_violation(const Corpus& corpus, ViolationKind kind) {
  const auto report = validate(corpus);
  return std::any_of(report.begin(), report.end(), [&](const Violation& v) { return v.kind == kind; });
}

TEST(Corpus, ExampleDialogLoadsWithEighteenSegments) {
  const auto corpus = example_dialog();
  ASSERT_EQ(corpus.dialogs.size(), 1u);
  const auto& d = corpus.dialogs[0];
  ASSERT_EQ(d.segments.size(), 18u);
  const auto& first = d.segments[0];
  EXPECT_EQ(first.speaker, Speaker::System);
  EXPECT_EQ(first.text.rfind("Bienvenido al servicio de informacion", 0), 0u);
  EXPECT_EQ(first.labels.l1, l1::kApertura);
  EXPECT_TRUE(first.labels.l2.empty());
  EXPECT_TRUE(first.labels.l3.empty());

  // Sets are stored sorted by inventory index regardless of file order.
  const auto& booking = d.segments[9];
  std::vector<int> expected{l3("Destino"), l3("Día"), l3("Origen")};
  std::sort(expected.begin(), expected.end());
  EXPECT_EQ(booking.labels.l3, expected);
  EXPECT_EQ(booking.labels.l2, std::vector<int>{l2("Hora Salida")});
  for (int i = 0; i < 18; ++i) EXPECT_EQ(d.segments[static_cast<std::size_t>(i)].position, i);
}

TEST(Corpus, ExampleDialogValidates) { EXPECT_TRUE(validate(example_dialog()).empty()); }

TEST(Corpus, EmptyDialogListIsValid) {
  const auto corpus = parse_corpus_json(R"({"dialogs": []})");
  EXPECT_TRUE(corpus.dialogs.empty());
  EXPECT_TRUE(validate(corpus).empty());
}

TEST(Corpus, GateLabelWithL2IsRejectedOnLoad) {
  const std::string text = R"({"dialogs": [{"id": "x", "segments": [
      {"speaker": "system", "text": "un momento", "l1": "Espera", "l2": ["Precio"], "l3": []}]}]})";
  EXPECT_THROW(parse_corpus_json(text), DataError);
}

TEST(Corpus, UnknownLabelAndMalformedRecordsAreRejected) {
  EXPECT_THROW(parse_corpus_json(R"({"dialogs": [{"id": "x", "segments": [
      {"speaker": "user", "text": "hola", "l1": "Saludo"}]}]})"),
               DataError);
  EXPECT_THROW(parse_corpus_json(R"({"dialogs": [{"segments": []}]})"), DataError);
  EXPECT_THROW(parse_corpus_json("[1, 2"), DataError);
  EXPECT_THROW(parse_corpus_tsv("d1\t0\tuser\tPregunta\n"), DataError);
}

TEST(Corpus, EnglishAliasesNormalizeOnLoad) {
  const auto corpus = parse_corpus_json(R"({"dialogs": [{"id": "x", "segments": [
      {"speaker": "user", "text": "a qué hora", "l1": "Question", "l2": ["Departure Time"], "l3": []}]}]})");
  EXPECT_EQ(corpus.dialogs[0].segments[0].labels.l1, l1::kPregunta);
  const auto json = corpus_to_json(corpus);
  EXPECT_NE(json.find("Pregunta"), std::string::npos);
  EXPECT_NE(json.find("Hora Salida"), std::string::npos);
}

TEST(Validate, ReportsEachViolationKind) {
  auto gate = one_dialog({segment("d", 0, Speaker::System, "espere", l1::kEspera, {l2("Precio")})});
  EXPECT_TRUE(has_violation(gate, ViolationKind::GateViolation));

  auto dup = one_dialog({segment("d", 0, Speaker::User, "de bilbao", l1::kRespuesta, {0}, {l3("Origen"), l3("Origen")})});
  EXPECT_TRUE(has_violation(dup, ViolationKind::DuplicateLabel));

  auto gap = one_dialog({segment("d", 0, Speaker::User, "hola", l1::kPregunta),
                         segment("d", 2, Speaker::User, "adios", l1::kPregunta)});
  EXPECT_TRUE(has_violation(gap, ViolationKind::PositionGap));

  auto mismatch = one_dialog({segment("other", 0, Speaker::User, "hola", l1::kPregunta)});
  mismatch.dialogs[0].id = "d";
  EXPECT_TRUE(has_violation(mismatch, ViolationKind::DialogIdMismatch));

  auto range = one_dialog({segment("d", 0, Speaker::User, "hola", l1::kPregunta, {10})});
  EXPECT_TRUE(has_violation(range, ViolationKind::LabelOutOfRange));

  auto unsorted = one_dialog({segment("d", 0, Speaker::User, "hola", l1::kPregunta, {3, 1})});
  EXPECT_TRUE(has_violation(unsorted, ViolationKind::UnsortedLabels));

  auto empty = one_dialog({segment("d", 0, Speaker::User, "¿?", l1::kPregunta)});
  EXPECT_TRUE(has_violation(empty, ViolationKind::EmptyText));

  Corpus twice = gap;
  twice.dialogs[0] = one_dialog({segment("d", 0, Speaker::User, "hola", l1::kPregunta)}).dialogs[0];
  twice.dialogs.push_back(twice.dialogs[0]);
  EXPECT_TRUE(has_violation(twice, ViolationKind::DuplicateDialogId));
}

TEST(Validate, DoesNotMutate) {
  auto corpus = one_dialog({segment("d", 0, Speaker::User, "hola", l1::kPregunta, {3, 1})});
  const auto before = corpus;
  (void)validate(corpus);
  EXPECT_EQ(corpus, before);
}

TEST(CorpusStats, ExampleDialogCounts) {
  const auto stats = corpus_stats(example_dialog());
  EXPECT_EQ(stats.segments, 18u);
  EXPECT_EQ(stats.user_segments, 7u);
  EXPECT_EQ(stats.system_segments, 11u);
  EXPECT_EQ(stats.l1[l1::kConfirmacion].total, 4u);
  EXPECT_EQ(stats.l1[l1::kConfirmacion].system, 4u);
  EXPECT_EQ(stats.l2[0].name, "Nil");
  EXPECT_EQ(stats.l2[0].total, 6u);
  EXPECT_EQ(stats.l3[0].total, 9u);
}

TEST(CorpusStats, SingleSegmentIsHundredPercent) {
  const auto stats = corpus_stats(one_dialog({segment("d", 0, Speaker::User, "sí", l1::kAfirmacion, {l2("Origen")})}));
  EXPECT_DOUBLE_EQ(stats.l1[l1::kAfirmacion].percent_of_segments, 100.0);
  EXPECT_DOUBLE_EQ(stats.l2[1 + l2("Origen")].percent_of_segments, 100.0);
  EXPECT_DOUBLE_EQ(stats.l3[0].percent_of_segments, 100.0);
}

// Checks the count and percentage identities of any corpus.
void expect_stats_consistent(const Corpus& corpus) {
  const auto stats = corpus_stats(corpus);
  ASSERT_EQ(stats.segments, corpus.segment_count());
  ASSERT_EQ(stats.user_segments + stats.system_segments, stats.segments);
  std::size_t l1_total = 0;
  double l1_percent = 0.0;
  for (const auto& row : stats.l1) {
    EXPECT_EQ(row.user + row.system, row.total);
    l1_total += row.total;
    l1_percent += row.percent_of_segments;
  }
  EXPECT_EQ(l1_total, stats.segments);
  if (stats.segments) {
    EXPECT_NEAR(l1_percent, 100.0, 1e-9);
  }
  for (const auto* rows : {&stats.l2, &stats.l3}) {
    double occurrences = 0.0;
    for (const auto& row : *rows) {
      EXPECT_EQ(row.user + row.system, row.total);
      occurrences += row.percent_of_occurrences;
      EXPECT_LE(row.total, stats.segments);
    }
    if (stats.segments) {
      EXPECT_NEAR(occurrences, 100.0, 1e-9);
    }
  }
}

TEST(CorpusStats, IdentitiesHoldOnSyntheticCorpora) {
  expect_stats_consistent(example_dialog());
  expect_stats_consistent(Corpus{});
  auto config = SyntheticConfig::defaults();
  config.dialogs = 40;
  for (std::uint64_t seed : {1u, 2u, 3u}) expect_stats_consistent(generate_synthetic(config, seed));
}

TEST(RoundTrip, JsonAndTsvAreIdentity) {
  auto config = SyntheticConfig::defaults();
  config.dialogs = 15;
  for (const auto& corpus : {example_dialog(), generate_synthetic(config, 5)}) {
    EXPECT_EQ(parse_corpus_json(corpus_to_json(corpus)), corpus);
    EXPECT_EQ(parse_corpus_tsv(corpus_to_tsv(corpus)), corpus);
  }
}

TEST(RoundTrip, FilesInBothFormats) {
  testing::TempDir dir("corpus");
  const auto corpus = example_dialog();
  save_corpus(corpus, dir.path() / "c.json", CorpusFormat::Json);
  save_corpus(corpus, dir.path() / "c.tsv", CorpusFormat::Tsv);
  EXPECT_EQ(load_corpus(dir.path() / "c.json", CorpusFormat::Json), corpus);
  EXPECT_EQ(load_corpus(dir.path() / "c.tsv", CorpusFormat::Tsv), corpus);
  EXPECT_THROW(load_corpus(dir.path() / "missing.json", CorpusFormat::Json), DataError);
}

TEST(Tsv, CommentsAndNilMarkersAreParsed) {
  const std::string text =
      "# dialog_id\tposition\tspeaker\tl1\tl2\tl3\ttext\n"
      "d1\t1\tuser\tRespuesta\tHora Salida\tOrigen,Destino\tde bilbao a la coruña\n"
      "d1\t0\tsystem\tApertura\t-\t-\tbienvenido\n";
  const auto corpus = parse_corpus_tsv(text);
  ASSERT_EQ(corpus.dialogs.size(), 1u);
  const auto& s = corpus.dialogs[0].segments;
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].labels.l1, l1::kApertura);
  EXPECT_EQ(s[1].labels.l3.size(), 2u);
}

Corpus dialogs(int n) {
  Corpus corpus;
  for (int i = 0; i < n; ++i) {
    Dialog d;
    d.id = "dialog-" + std::to_string(i);
    d.segments.push_back(segment(d.id, 0, Speaker::User, "hola", l1::kPregunta));
    corpus.dialogs.push_back(std::move(d));
  }
  return corpus;
}

TEST(Folds, TenDialogsFiveFoldsOfTwo) {
  const auto folds = make_folds(dialogs(10), 5, 0);
  for (int f = 0; f < 5; ++f) EXPECT_EQ(folds.dialogs_in(f).size(), 2u);
}

TEST(Folds, PartitionBalancedAndDeterministic) {
  for (int n : {900, 23, 7}) {
    const auto corpus = dialogs(n);
    const auto a = make_folds(corpus, 5, 0);
    EXPECT_EQ(a, make_folds(corpus, 5, 0));
    ASSERT_EQ(a.fold_of_dialog.size(), static_cast<std::size_t>(n));
    std::set<std::string> seen;
    std::size_t smallest = SIZE_MAX, largest = 0;
    for (int f = 0; f < 5; ++f) {
      const auto ids = a.dialogs_in(f);
      smallest = std::min(smallest, ids.size());
      largest = std::max(largest, ids.size());
      for (const auto& id : ids) EXPECT_TRUE(seen.insert(id).second);
    }
    EXPECT_EQ(seen.size(), static_cast<std::size_t>(n));
    EXPECT_LE(largest - smallest, 1u);
    if (n == 900) {
      EXPECT_EQ(smallest, 180u);
    }
  }
  EXPECT_NE(make_folds(dialogs(50), 5, 0), make_folds(dialogs(50), 5, 1));
}

TEST(Folds, ErrorsAndSerialization) {
  EXPECT_THROW(make_folds(dialogs(3), 5, 0), DataError);
  EXPECT_THROW(make_folds(dialogs(3), 1, 0), DataError);
  const auto folds = make_folds(dialogs(12), 4, 99);
  EXPECT_EQ(fold_assignment_from_json(to_json(folds)), folds);
}

TEST(Split, SizesAndMinimum) {
  std::vector<std::string> ten, two{"a", "b"};
  for (int i = 0; i < 10; ++i) ten.push_back(std::to_string(i));
  auto s = split_train_val(ten, 0.1, 3);
  EXPECT_EQ(s.train.size(), 9u);
  EXPECT_EQ(s.val.size(), 1u);
  s = split_train_val(two, 0.1, 3);
  EXPECT_EQ(s.train.size(), 1u);
  EXPECT_EQ(s.val.size(), 1u);
  EXPECT_THROW(split_train_val({"a"}, 0.1, 3), DataError);
  EXPECT_THROW(split_train_val(ten, 1.0, 3), DataError);
}

TEST(Split, DisjointOrderPreservingAndDeterministic) {
  std::vector<std::string> ids;
  for (int i = 0; i < 40; ++i) ids.push_back("d" + std::to_string(100 + i));
  const auto a = split_train_val(ids, 0.25, 17);
  const auto b = split_train_val(ids, 0.25, 17);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.val.size(), 10u);
  EXPECT_TRUE(std::is_sorted(a.train.begin(), a.train.end()));
  EXPECT_TRUE(std::is_sorted(a.val.begin(), a.val.end()));
  std::set<std::string> all(a.train.begin(), a.train.end());
  for (const auto& id : a.val) EXPECT_TRUE(all.insert(id).second);
  EXPECT_EQ(all.size(), ids.size());
}

}  // namespace
}  // namespace diact
