#include "diact/text.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "diact/error.hpp"
#include "diact/random.hpp"

namespace diact {
namespace {

bool is_separator(UChar32 cp) {
  if (cp < 0) return true;  // ill-formed UTF-8
  const auto mask = U_GET_GC_MASK(cp);
  return (mask & (U_GC_P_MASK | U_GC_S_MASK)) != 0 || u_isUWhiteSpace(cp) || u_iscntrl(cp);
}

void append_utf8(std::string& out, UChar32 cp) {
  char buffer[U8_MAX_LENGTH];
  int32_t length = 0;
  UBool error = false;
  U8_APPEND(buffer, length, U8_MAX_LENGTH, cp, error);
  if (!error) out.append(buffer, static_cast<std::size_t>(length));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  const auto* bytes = reinterpret_cast<const uint8_t*>(text.data());
  const auto length = static_cast<int32_t>(text.size());
  int32_t offset = 0;
  while (offset < length) {
    UChar32 cp = 0;
    U8_NEXT(bytes, offset, length, cp);
    if (is_separator(cp)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
      continue;
    }
    append_utf8(current, u_tolower(cp));
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) {
  tokens_.reserve(tokens.size() + 2);
  tokens_.emplace_back(kPadToken);
  tokens_.emplace_back(kUnkToken);
  tokens_.insert(tokens_.end(), tokens.begin(), tokens.end());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw DataError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

int Vocabulary::lookup(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

nlohmann::json Vocabulary::to_json() const { return tokens_; }

Vocabulary Vocabulary::from_json(const nlohmann::json& json) {
  if (!json.is_array() || json.size() < 2 || json[0] != kPadToken || json[1] != kUnkToken) {
    throw DataError("vocabulary JSON must be an array starting with \"<pad>\", \"<unk>\"");
  }
  std::vector<std::string> content;
  for (std::size_t i = 2; i < json.size(); ++i) content.push_back(json[i].get<std::string>());
  return Vocabulary(content);
}

Vocabulary build_vocab(const Corpus& corpus, int min_count) {
  std::map<std::string, int> counts;
  for (const auto& dialog : corpus.dialogs) {
    for (const auto& segment : dialog.segments) {
      for (auto& token : tokenize(segment.text)) ++counts[std::move(token)];
    }
  }
  std::vector<std::pair<std::string, int>> ranked;
  for (auto& [token, count] : counts) {
    if (count >= min_count && token != Vocabulary::kPadToken && token != Vocabulary::kUnkToken) {
      ranked.emplace_back(token, count);
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& entry : ranked) tokens.push_back(std::move(entry.first));
  return Vocabulary(tokens);
}

TokenizedSegment encode_text(std::string_view text, const Vocabulary& vocab, int max_len) {
  if (max_len < 1) throw DataError("max_len must be at least 1");
  TokenizedSegment out;
  out.tokens = tokenize(text);
  if (out.tokens.empty()) throw DataError("segment text has no tokens: '" + std::string(text) + "'");
  if (out.tokens.size() > static_cast<std::size_t>(max_len)) out.tokens.resize(static_cast<std::size_t>(max_len));
  out.indices.reserve(out.tokens.size());
  for (const auto& token : out.tokens) out.indices.push_back(vocab.lookup(token));
  return out;
}

TokenizedSegment encode(const Segment& segment, const Vocabulary& vocab, int max_len) {
  return encode_text(segment.text, vocab, max_len);
}

EmbeddingTable random_embeddings(const Vocabulary& vocab, int dimension, std::uint64_t seed) {
  if (dimension < 1) throw DataError("embedding dimension must be at least 1");
  EmbeddingTable table;
  table.dimension = dimension;
  table.matrix = nn::Tensor::matrix(static_cast<std::size_t>(vocab.size()), static_cast<std::size_t>(dimension));
  RandomSource rng(seed);
  for (std::size_t r = 1; r < table.matrix.rows(); ++r) {
    for (double& value : table.matrix.row(r)) value = rng.uniform(-kEmbeddingInitRange, kEmbeddingInitRange);
  }
  return table;
}

EmbeddingTable parse_pretrained_embeddings(std::string_view content, const Vocabulary& vocab,
                                           int dimension, std::uint64_t seed) {
  EmbeddingTable table = random_embeddings(vocab, dimension, seed);
  std::istringstream in{std::string(content)};
  std::string line;
  if (!std::getline(in, line)) throw DataError("word-vector file: missing header");
  long long count = 0;
  long long file_dim = 0;
  {
    std::istringstream header(line);
    std::string extra;
    if (!(header >> count >> file_dim) || (header >> extra) || count < 0 || file_dim < 1) {
      throw DataError("word-vector file: malformed header '" + line + "'");
    }
  }
  if (file_dim != dimension) {
    throw DataError("word-vector file: dimension " + std::to_string(file_dim) +
                    " does not match configured dimension " + std::to_string(dimension));
  }
  std::vector<double> values(static_cast<std::size_t>(dimension));
  int line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos || space == 0) {
      throw DataError("word-vector file: unreadable line " + std::to_string(line_number));
    }
    const std::string token = line.substr(0, space);
    const char* cursor = line.data() + space;
    const char* end = line.data() + line.size();
    for (int d = 0; d < dimension; ++d) {
      while (cursor < end && *cursor == ' ') ++cursor;
      const auto [next, ec] = std::from_chars(cursor, end, values[static_cast<std::size_t>(d)]);
      if (ec != std::errc()) {
        throw DataError("word-vector file: unreadable line " + std::to_string(line_number));
      }
      cursor = next;
    }
    while (cursor < end && *cursor == ' ') ++cursor;
    if (cursor != end) throw DataError("word-vector file: unreadable line " + std::to_string(line_number));
    if (!vocab.contains(token)) continue;
    const int index = vocab.lookup(token);
    if (index == Vocabulary::kPad) continue;
    std::copy(values.begin(), values.end(), table.matrix.row(static_cast<std::size_t>(index)).begin());
  }
  return table;
}

EmbeddingTable load_pretrained_embeddings(const std::filesystem::path& path, const Vocabulary& vocab,
                                          int dimension, std::uint64_t seed) {
  return parse_pretrained_embeddings(read_file(path), vocab, dimension, seed);
}

}  // namespace diact
