#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "lexipivot/corpus/synthetic.hpp"
#include "lexipivot/induction/ranking.hpp"
#include "lexipivot/localization/localize.hpp"
#include "lexipivot/model/caption_model.hpp"
#include "lexipivot/model/training.hpp"

namespace lexipivot::cli {

struct ExtractionConfig {
  LocalizationMethod method = LocalizationMethod::probe;
  std::optional<std::size_t> cap;
};

struct InductionConfig {
  std::vector<RankingMethod> methods = all_ranking_methods();
  double lambda = 0.5;
  /// Candidates written per rankings line; 0 writes full lists.
  std::size_t top_n = 20;
  bool normalize_occurrences = false;
  /// Extra report rows pooling several POS tags, labelled "A+B".
  std::vector<std::vector<std::string>> pos_groups = {{"NOUN", "ADJ"}};
};

struct RunConfig {
  std::uint64_t seed = 17;
  CorpusConfig corpus;
  std::size_t min_count = 6;
  ModelConfig model;  // input_dim and regions come from the corpus
  TrainingConfig training;
  double val_fraction = 0.1;
  ExtractionConfig extraction;
  InductionConfig induction;
};

/// Applies a JSON document over the defaults. Unknown keys raise ConfigError
/// naming the full key path.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// Every field, including defaults.
nlohmann::ordered_json to_json(const RunConfig& config);
/// Hex digest of the canonical resolved config.
std::string config_hash(const RunConfig& config);

/// Seed of a named stage stream ("corpus", "init", "shuffle", "subsample").
std::uint64_t stage_seed(const RunConfig& config, const char* stream);

}  // namespace lexipivot::cli
