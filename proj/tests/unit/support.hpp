#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "diact/corpus.hpp"
#include "diact/labels.hpp"

namespace diact::testing {

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(DIACT_SOURCE_DIR) / "data" / name;
}

inline Corpus example_dialog() {
  return load_corpus(data_path("dihana_example_dialog.json"), CorpusFormat::Json);
}

inline int l2(std::string_view name) { return LabelSpace::canonical().index_of(Level::L2, name); }
inline int l3(std::string_view name) { return LabelSpace::canonical().index_of(Level::L3, name); }

inline Segment segment(const std::string& dialog, int position, Speaker speaker, std::string text, int l1,
                       std::vector<int> l2 = {}, std::vector<int> l3 = {}) {
  Segment s;
  s.dialog_id = dialog;
  s.position = position;
  s.speaker = speaker;
  s.text = std::move(text);
  s.labels.l1 = l1;
  s.labels.l2 = std::move(l2);
  s.labels.l3 = std::move(l3);
  return s;
}

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("diact-" + tag + "-" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace diact::testing
