#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lexipivot/model/caption_model.hpp"

namespace lexipivot {

struct TrainingExample {
  std::string language;
  const SpatialImage* image = nullptr;
  TokenSeq tokens;  // begin ... end
};

struct LossResult {
  double nll_sum = 0.0;
  std::size_t token_count = 0;

  double mean() const noexcept { return token_count ? nll_sum / static_cast<double>(token_count) : 0.0; }
};

/// Teacher-forced negative log-likelihood averaged over predicted tokens.
/// The batch may mix languages.
LossResult sequence_loss(const MultiLingualModel& model, std::span<const TrainingExample> batch);

/// Same loss; gradients of the mean accumulate into trainable parameters.
LossResult sequence_loss_backward(MultiLingualModel& model, std::span<const TrainingExample> batch);

/// Teacher-forced trace over pre-encoded regions: one record per predicted
/// token (targets tokens[1..]).
struct TeacherForcedTrace {
  std::vector<std::vector<double>> gold_probability;   // [example][step]
  std::vector<std::vector<Vector>> attention;          // [example][step] K weights
  std::vector<std::vector<Vector>> context;            // [example][step] D
};

TeacherForcedTrace trace_teacher_forced(const MultiLingualModel& model, const std::string& language,
                                        std::span<const EncodedImage> regions,
                                        std::span<const TokenSeq> tokens);

}  // namespace lexipivot
