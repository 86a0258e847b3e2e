#include "diact/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "diact/error.hpp"

namespace diact::model {
namespace {

constexpr std::string_view kFormat = "diact-checkpoint";
constexpr int kVersion = 1;

void append_le(std::string& out, double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  for (int byte = 0; byte < 8; ++byte) out.push_back(static_cast<char>((bits >> (8 * byte)) & 0xFF));
}

double read_le(const char* bytes) {
  std::uint64_t bits = 0;
  for (int byte = 0; byte < 8; ++byte) {
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[byte])) << (8 * byte);
  }
  return std::bit_cast<double>(bits);
}

std::filesystem::path with_suffix(const std::filesystem::path& stem, const char* suffix) {
  auto path = stem;
  path += suffix;
  return path;
}

}  // namespace

std::filesystem::path manifest_path(const std::filesystem::path& stem) { return with_suffix(stem, ".json"); }
std::filesystem::path blob_path(const std::filesystem::path& stem) { return with_suffix(stem, ".bin"); }

void save_checkpoint(const std::filesystem::path& stem, const LevelClassifier& classifier, const Vocabulary& vocab,
                     int max_len, const CombinedInventory* inventory, const nlohmann::json& extra) {
  nlohmann::ordered_json manifest;
  manifest["format"] = kFormat;
  manifest["version"] = kVersion;
  manifest["classifier"] = classifier.config().to_json();
  manifest["classes"] = classifier.classes();
  manifest["embeddings_trainable"] = classifier.embeddings_trainable();
  manifest["max_len"] = max_len;
  manifest["vocabulary"] = vocab.to_json();
  if (inventory) manifest["combined_inventory"] = inventory->to_json();
  manifest["extra"] = extra;

  std::string blob;
  nlohmann::ordered_json layout = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (const nn::Parameter* p : classifier.all_parameters()) {
    layout.push_back({{"name", p->name}, {"shape", p->value.shape()}, {"offset", offset}});
    for (double v : p->value.values()) append_le(blob, v);
    offset += p->value.size();
  }
  manifest["parameters"] = layout;
  manifest["values"] = offset;
  manifest["blob"] = blob_path(stem).filename().string();

  std::ofstream json_out(manifest_path(stem), std::ios::binary);
  json_out << manifest.dump(1) << '\n';
  std::ofstream blob_out(blob_path(stem), std::ios::binary);
  blob_out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!json_out || !blob_out) throw RuntimeFailure("cannot write checkpoint " + stem.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& stem) {
  std::ifstream json_in(manifest_path(stem), std::ios::binary);
  if (!json_in) throw DataError("cannot open checkpoint manifest " + manifest_path(stem).string());
  Checkpoint checkpoint;
  try {
    const auto manifest = nlohmann::json::parse(json_in);
    if (manifest.at("format") != kFormat || manifest.at("version") != kVersion) {
      throw DataError("unsupported checkpoint format in " + manifest_path(stem).string());
    }
    const auto config = ClassifierConfig::from_json(manifest.at("classifier"));
    checkpoint.vocabulary = Vocabulary::from_json(manifest.at("vocabulary"));
    checkpoint.max_len = manifest.at("max_len").get<int>();
    if (manifest.contains("combined_inventory")) {
      checkpoint.inventory = CombinedInventory::from_json(manifest.at("combined_inventory"));
    }
    checkpoint.extra = manifest.at("extra");

    std::ifstream blob_in(blob_path(stem), std::ios::binary);
    if (!blob_in) throw DataError("cannot open checkpoint blob " + blob_path(stem).string());
    const std::string blob((std::istreambuf_iterator<char>(blob_in)), std::istreambuf_iterator<char>());
    const auto values = manifest.at("values").get<std::size_t>();
    if (blob.size() != values * 8) {
      throw DataError("checkpoint blob holds " + std::to_string(blob.size()) + " bytes, expected " +
                      std::to_string(values * 8));
    }

    const auto& layout = manifest.at("parameters");
    const auto embedding_shape = layout.at(0).at("shape").get<std::vector<std::size_t>>();
    if (embedding_shape.size() != 2) throw DataError("checkpoint embedding must be a matrix");
    EmbeddingTable table;
    table.dimension = static_cast<int>(embedding_shape[1]);
    table.matrix = nn::Tensor(embedding_shape);
    table.trainable = manifest.at("embeddings_trainable").get<bool>();
    checkpoint.classifier =
        std::make_shared<LevelClassifier>(config, table, manifest.at("classes").get<int>(), std::uint64_t{0});

    const auto params = checkpoint.classifier->all_parameters();
    if (params.size() != layout.size()) throw DataError("checkpoint parameter count does not match its topology");
    for (std::size_t k = 0; k < params.size(); ++k) {
      const auto& entry = layout.at(k);
      nn::Parameter& p = *params[k];
      if (entry.at("name").get<std::string>() != p.name ||
          entry.at("shape").get<std::vector<std::size_t>>() != p.value.shape()) {
        throw DataError("checkpoint parameter " + std::to_string(k) + " does not match " + p.name);
      }
      const auto offset = entry.at("offset").get<std::size_t>();
      if (offset + p.value.size() > values) throw DataError("checkpoint parameter " + p.name + " overruns the blob");
      for (std::size_t i = 0; i < p.value.size(); ++i) p.value[i] = read_le(blob.data() + 8 * (offset + i));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed checkpoint manifest: " + std::string(e.what()));
  }
  return checkpoint;
}

}  // namespace diact::model
