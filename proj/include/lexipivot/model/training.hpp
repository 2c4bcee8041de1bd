#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "lexipivot/model/caption_model.hpp"
#include "lexipivot/model/sequence_loss.hpp"

namespace lexipivot {

struct TrainingConfig {
  std::size_t batch_size = 32;
  double learning_rate = 1e-4;
  std::size_t max_epochs = 100;
  /// Epochs without validation improvement before stopping; 0 disables.
  std::size_t patience = 10;
  double clip_norm = 5.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError.
  void validate() const;
};

struct LanguageSplit {
  std::string language;
  std::vector<TrainingExample> train;
  std::vector<TrainingExample> val;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  std::string language;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct TrainingLog {
  std::vector<EpochRecord> rows;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  /// Token-weighted validation loss over all languages at best_epoch.
  double best_val_loss = 0.0;
  bool early_stopped = false;

  /// Validation loss of one language at the best epoch.
  double best_val_loss_for(const std::string& language) const;
};

using EpochCallback = std::function<void(const std::vector<EpochRecord>&)>;

/// Order in which languages contribute batches within an epoch: proportional
/// to their batch counts, ties to the lower index. {2, 1} -> {0, 0, 1}.
std::vector<std::size_t> interleave_schedule(std::span<const std::size_t> batch_counts);

/// Joint training over mono-lingual mini-batches. The model ends holding the
/// best-validation parameters.
TrainingLog train(MultiLingualModel& model, std::span<const LanguageSplit> splits,
                  const TrainingConfig& config, const EpochCallback& on_epoch = {});

/// Loss over a whole example list, evaluated in chunks.
LossResult evaluate_loss(const MultiLingualModel& model, std::span<const TrainingExample> examples,
                         std::size_t chunk = 64);

/// Examples whose image id falls in the last `val_fraction` of the sorted
/// distinct ids go to validation.
LanguageSplit split_examples(std::string language, std::vector<TrainingExample> examples,
                             double val_fraction);

}  // namespace lexipivot
