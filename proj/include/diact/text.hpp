#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "diact/corpus.hpp"
#include "diact/tensor.hpp"

namespace diact {

// Word-level tokenization: lowercases, replaces every Unicode punctuation (P*)
// and symbol (S*) code point with a separator, and splits on whitespace.
// Returns an empty vector when nothing but punctuation or spaces remains.
std::vector<std::string> tokenize(std::string_view text);

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocabulary();
  // `tokens` excludes the reserved entries; duplicates are rejected.
  explicit Vocabulary(const std::vector<std::string>& tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  int lookup(std::string_view token) const;  // kUnk when absent
  bool contains(std::string_view token) const;
  const std::string& token(int index) const { return tokens_.at(static_cast<std::size_t>(index)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& json);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Orders content tokens by descending frequency, ties broken lexicographically.
Vocabulary build_vocab(const Corpus& corpus, int min_count = 1);

struct TokenizedSegment {
  std::vector<std::string> tokens;
  std::vector<int> indices;
};

inline constexpr int kDefaultMaxLen = 60;

// Right-truncates to max_len tokens; throws DataError on an empty token list.
TokenizedSegment encode(const Segment& segment, const Vocabulary& vocab, int max_len = kDefaultMaxLen);
TokenizedSegment encode_text(std::string_view text, const Vocabulary& vocab, int max_len = kDefaultMaxLen);

struct EmbeddingTable {
  int dimension = 200;
  nn::Tensor matrix;  // vocabulary size x dimension
  bool trainable = true;

  int rows() const { return static_cast<int>(matrix.rows()); }
};

inline constexpr double kEmbeddingInitRange = 0.05;

// Entries uniform in (-0.05, 0.05); the PAD row is zero.
EmbeddingTable random_embeddings(const Vocabulary& vocab, int dimension, std::uint64_t seed);

// Textual word-vector format: a "count dim" header, then "token v1 ... vdim".
// Vocabulary tokens missing from the file get random rows drawn with `seed`.
EmbeddingTable load_pretrained_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                                          int dimension, std::uint64_t seed);
EmbeddingTable parse_pretrained_embeddings(std::string_view content, const Vocabulary& vocab,
                                           int dimension, std::uint64_t seed);

}  // namespace diact
