#include <cmath>

#include <gtest/gtest.h>

#include "diact/error.hpp"
#include "diact/text.hpp"
#include "support.hpp"

namespace diact {
namespace {

using Tokens = std::vector<std::string>;

TEST(Tokenize, FigureSentences) {
  EXPECT_EQ(tokenize("Quería ir a La Coruña"), (Tokens{"quería", "ir", "a", "la", "coruña"}));
  EXPECT_EQ(tokenize("¿Desea algo más?"), (Tokens{"desea", "algo", "más"}));
  EXPECT_EQ(tokenize("No."), Tokens{"no"});
  EXPECT_EQ(tokenize("Sí, ¿me puede decir el precio del billete?"),
            (Tokens{"sí", "me", "puede", "decir", "el", "precio", "del", "billete"}));
}

TEST(Tokenize, EmptyAndPunctuationOnly) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("¿? ¡! ... -- €").empty());
}

TEST(Tokenize, SymbolsAndPunctuationSeparateWords) {
  EXPECT_EQ(tokenize("ida/vuelta 36€"), (Tokens{"ida", "vuelta", "36"}));
  EXPECT_EQ(tokenize("ÁLVARO\tÑandú"), (Tokens{"álvaro", "ñandú"}));
}

TEST(Tokenize, IdempotentOnJoinedOutput) {
  for (const auto& segment : testing::example_dialog().dialogs[0].segments) {
    const auto once = tokenize(segment.text);
    std::string joined;
    for (const auto& t : once) joined += t + " ";
    EXPECT_EQ(tokenize(joined), once);
  }
}

Corpus texts(std::vector<std::string> lines) {
  Corpus corpus;
  Dialog d;
  d.id = "v";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    d.segments.push_back(testing::segment("v", static_cast<int>(i), Speaker::User, lines[i], l1::kPregunta));
  }
  corpus.dialogs.push_back(std::move(d));
  return corpus;
}

TEST(Vocabulary, ReservedEntriesFirst) {
  const Vocabulary vocab;
  EXPECT_EQ(vocab.size(), 2);
  EXPECT_EQ(vocab.token(Vocabulary::kPad), Vocabulary::kPadToken);
  EXPECT_EQ(vocab.token(Vocabulary::kUnk), Vocabulary::kUnkToken);
  EXPECT_EQ(vocab.lookup("tren"), Vocabulary::kUnk);
  EXPECT_THROW(Vocabulary(Tokens{"a", "a"}), DataError);
}

TEST(BuildVocab, SingleSegment) {
  const auto vocab = build_vocab(texts({"sí sí"}));
  EXPECT_EQ(vocab.tokens(), (Tokens{"<pad>", "<unk>", "sí"}));
}

TEST(BuildVocab, FrequencyThenLexicographicOrder) {
  // Counts: tren 3, a 2, bilbao 2, de 1, el 1.
  const auto vocab = build_vocab(texts({"el tren a bilbao", "tren de bilbao", "a tren"}));
  EXPECT_EQ(vocab.tokens(), (Tokens{"<pad>", "<unk>", "tren", "a", "bilbao", "de", "el"}));
  const auto frequent = build_vocab(texts({"el tren a bilbao", "tren de bilbao", "a tren"}), 2);
  EXPECT_EQ(frequent.tokens(), (Tokens{"<pad>", "<unk>", "tren", "a", "bilbao"}));
  EXPECT_EQ(build_vocab(texts({"tren de bilbao", "a tren"})), build_vocab(texts({"tren de bilbao", "a tren"})));
}

TEST(Vocabulary, JsonRoundTrip) {
  const auto vocab = build_vocab(testing::example_dialog());
  EXPECT_EQ(Vocabulary::from_json(vocab.to_json()), vocab);
}

TEST(Encode, FigureSegmentAndTruncation) {
  const auto vocab = build_vocab(testing::example_dialog());
  const auto no = encode_text("No.", vocab, 50);
  EXPECT_EQ(no.tokens, Tokens{"no"});
  ASSERT_EQ(no.indices.size(), 1u);
  EXPECT_EQ(no.indices[0], vocab.lookup("no"));

  std::string long_text;
  for (int i = 0; i < 60; ++i) long_text += "w" + std::to_string(i) + " ";
  const auto cut = encode_text(long_text, vocab, 50);
  ASSERT_EQ(cut.tokens.size(), 50u);
  EXPECT_EQ(cut.tokens.front(), "w0");
  EXPECT_EQ(cut.tokens.back(), "w49");
  for (int index : cut.indices) EXPECT_EQ(index, Vocabulary::kUnk);

  EXPECT_THROW(encode_text("¿?", vocab, 50), DataError);
}

TEST(RandomEmbeddings, RangePadAndDeterminism) {
  std::vector<std::string> tokens;
  for (int i = 0; i < 998; ++i) tokens.push_back("t" + std::to_string(i));
  const Vocabulary vocab(tokens);
  const auto table = random_embeddings(vocab, 200, 4);
  EXPECT_EQ(table.rows(), 1000);
  EXPECT_EQ(table.matrix, random_embeddings(vocab, 200, 4).matrix);
  for (double x : table.matrix.row(Vocabulary::kPad)) EXPECT_EQ(x, 0.0);
  double sum = 0.0;
  for (std::size_t r = 1; r < table.matrix.rows(); ++r) {
    for (double x : table.matrix.row(r)) {
      ASSERT_GT(x, -kEmbeddingInitRange);
      ASSERT_LT(x, kEmbeddingInitRange);
      sum += x;
    }
  }
  EXPECT_NEAR(sum / (999.0 * 200.0), 0.0, 0.005);
}

TEST(PretrainedEmbeddings, CopiesRowsAndFillsMissing) {
  const Vocabulary vocab(Tokens{"tren", "bilbao"});
  const std::string file =
      "3 4\n"
      "tren 0.5 -1.25 2 0.125\n"
      "madrid 1 1 1 1\n"
      "<pad> 9 9 9 9\n";
  const auto table = parse_pretrained_embeddings(file, vocab, 4, 1);
  const auto tren = table.matrix.row(static_cast<std::size_t>(vocab.lookup("tren")));
  EXPECT_EQ(std::vector<double>(tren.begin(), tren.end()), (std::vector<double>{0.5, -1.25, 2.0, 0.125}));
  for (double x : table.matrix.row(Vocabulary::kPad)) EXPECT_EQ(x, 0.0);
  for (double x : table.matrix.row(static_cast<std::size_t>(vocab.lookup("bilbao")))) {
    EXPECT_LT(std::abs(x), kEmbeddingInitRange);
    EXPECT_NE(x, 0.0);
  }
}

TEST(PretrainedEmbeddings, Errors) {
  const Vocabulary vocab(Tokens{"tren"});
  EXPECT_THROW(parse_pretrained_embeddings("3 300\n", vocab, 200, 0), DataError);
  EXPECT_THROW(parse_pretrained_embeddings("three 4\n", vocab, 4, 0), DataError);
  EXPECT_THROW(parse_pretrained_embeddings("1 2\ntren 0.1\n", vocab, 2, 0), DataError);
  EXPECT_THROW(parse_pretrained_embeddings("1 2\ntren 0.1 abc\n", vocab, 2, 0), DataError);
}

}  // namespace
}  // namespace diact
