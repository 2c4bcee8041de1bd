#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lexipivot/model/caption_model.hpp"

namespace lexipivot {

enum class DecodeMode { greedy, beam };

struct GenerationOptions {
  DecodeMode mode = DecodeMode::greedy;
  std::size_t beam_width = 3;
  /// Cap on the output length including sentinels; 0 uses the model's max_len.
  std::size_t max_len = 0;
};

/// Begin sentinel, generated words, then the end sentinel unless the length
/// cap was hit first. Pad and begin are never generated.
TokenSeq generate_caption(const MultiLingualModel& model, const std::string& language,
                          const EncodedImage& regions, const GenerationOptions& options = {});
TokenSeq generate_caption(const MultiLingualModel& model, const std::string& language,
                          const SpatialImage& image, const GenerationOptions& options = {});

}  // namespace lexipivot
