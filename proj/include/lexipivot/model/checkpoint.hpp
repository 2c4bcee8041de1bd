#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "lexipivot/model/caption_model.hpp"

namespace lexipivot {

struct CheckpointInfo {
  std::uint64_t seed = 0;
  /// language id -> vocabulary file, relative to the checkpoint directory.
  std::map<std::string, std::string> vocabulary_files;
};

struct LoadedCheckpoint {
  MultiLingualModel model;
  CheckpointInfo info;
};

/// Writes `<path>` (parameters) and `<path>.json` (dims, languages, seed).
void save_checkpoint(const std::filesystem::path& path, const MultiLingualModel& model,
                     const CheckpointInfo& info);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

std::string sidecar_path(const std::filesystem::path& path);

const char* to_string(ContextMode mode) noexcept;
/// Throws ConfigError for unknown names.
ContextMode context_mode_from_string(const std::string& name);

}  // namespace lexipivot
