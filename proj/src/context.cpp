#include "diact/context.hpp"

#include "diact/error.hpp"

namespace diact::model {
namespace {

int level_rank(Task task) {
  switch (task) {
    case Task::L1: return 1;
    case Task::L2: return 2;
    case Task::L3: return 3;
    case Task::Combined: return 0;
  }
  return 0;
}

void check_count(int n, const char* what) {
  if (n < 0 || n > kMaxContextSegments) {
    throw DataError(std::string("context: ") + what + " must be in [0, 3], got " + std::to_string(n));
  }
}

void write_block(std::vector<double>& out, std::size_t offset, Level level, const Annotation& labels) {
  if (level == Level::L1) {
    out[offset + static_cast<std::size_t>(labels.l1)] = 1.0;
    return;
  }
  for (int index : labels.set(level)) out[offset + static_cast<std::size_t>(index)] = 1.0;
}

void write_block(std::vector<double>& out, std::size_t offset, Task task, const Annotation& labels) {
  switch (task) {
    case Task::L1: write_block(out, offset, Level::L1, labels); break;
    case Task::L2: write_block(out, offset, Level::L2, labels); break;
    case Task::L3: write_block(out, offset, Level::L3, labels); break;
    case Task::Combined:
      write_block(out, offset, Level::L1, labels);
      write_block(out, offset + 11, Level::L2, labels);
      write_block(out, offset + 21, Level::L3, labels);
      break;
  }
}

}  // namespace

std::string_view to_string(Task task) {
  switch (task) {
    case Task::L1: return "L1";
    case Task::L2: return "L2";
    case Task::L3: return "L3";
    case Task::Combined: return "combined";
  }
  return "?";
}

Task parse_task(std::string_view text) {
  if (text == "combined" || text == "Combined") return Task::Combined;
  return task_for(parse_level(text));
}

Task task_for(Level level) {
  switch (level) {
    case Level::L1: return Task::L1;
    case Level::L2: return Task::L2;
    case Level::L3: return Task::L3;
  }
  return Task::L1;
}

bool is_single_label(Task task) { return task == Task::L1 || task == Task::Combined; }

int label_block_width(Level level) { return static_cast<int>(LabelSpace::canonical().size(level)); }

int label_block_width(Task task) {
  switch (task) {
    case Task::L1: return label_block_width(Level::L1);
    case Task::L2: return label_block_width(Level::L2);
    case Task::L3: return label_block_width(Level::L3);
    case Task::Combined:
      return label_block_width(Level::L1) + label_block_width(Level::L2) + label_block_width(Level::L3);
  }
  return 0;
}

void validate_context(const ContextConfig& config, Task task) {
  check_count(config.n_prev, "n_prev");
  const int own = level_rank(task);
  for (const auto& source : config.upper) {
    const int rank = static_cast<int>(source.level);
    if (own == 0 || rank >= own) {
      throw DataError("context: " + std::string(to_string(source.level)) + " is not above the " +
                      std::string(to_string(task)) + " classifier");
    }
    check_count(source.n_prev, "upper-level n_prev");
  }
}

int context_width(const ContextConfig& config, Task task) {
  validate_context(config, task);
  int width = config.n_prev * label_block_width(task);
  for (const auto& source : config.upper) {
    width += ((source.current ? 1 : 0) + source.n_prev) * label_block_width(source.level);
  }
  return width;
}

std::vector<double> encode_context(std::span<const Annotation> labels, std::size_t position,
                                   const ContextConfig& config, Task task) {
  if (position >= labels.size()) throw DataError("context: position outside dialog");
  std::vector<double> out(static_cast<std::size_t>(context_width(config, task)), 0.0);
  std::size_t offset = 0;
  const auto own_width = static_cast<std::size_t>(label_block_width(task));
  for (int back = 1; back <= config.n_prev; ++back) {
    if (position >= static_cast<std::size_t>(back)) write_block(out, offset, task, labels[position - back]);
    offset += own_width;
  }
  for (const auto& source : config.upper) {
    const auto width = static_cast<std::size_t>(label_block_width(source.level));
    if (source.current) {
      write_block(out, offset, source.level, labels[position]);
      offset += width;
    }
    for (int back = 1; back <= source.n_prev; ++back) {
      if (position >= static_cast<std::size_t>(back)) write_block(out, offset, source.level, labels[position - back]);
      offset += width;
    }
  }
  return out;
}

std::vector<double> encode_context(const Dialog& dialog, std::size_t position, const ContextConfig& config,
                                   Task task) {
  const auto labels = dialog.annotations();
  return encode_context(labels, position, config, task);
}

nlohmann::json ContextConfig::to_json() const {
  nlohmann::json sources = nlohmann::json::array();
  for (const auto& s : upper) {
    sources.push_back({{"level", std::string(diact::to_string(s.level))}, {"current", s.current}, {"n_prev", s.n_prev}});
  }
  return {{"n_prev", n_prev}, {"upper", sources}};
}

ContextConfig ContextConfig::from_json(const nlohmann::json& json) {
  ContextConfig config;
  try {
    config.n_prev = json.value("n_prev", 0);
    if (json.contains("upper")) {
      for (const auto& s : json.at("upper")) {
        config.upper.push_back(UpperContext{parse_level(s.at("level").get<std::string>()), s.value("current", false),
                                            s.value("n_prev", 0)});
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("context config: ") + e.what());
  }
  return config;
}

}  // namespace diact::model
