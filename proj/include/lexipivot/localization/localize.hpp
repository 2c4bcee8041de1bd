#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "lexipivot/model/caption_model.hpp"

namespace lexipivot {

enum class LocalizationMethod { probe, attention };

const char* to_string(LocalizationMethod method) noexcept;
/// Throws ConfigError.
LocalizationMethod localization_method_from_string(const std::string& name);

/// Grounded feature of the word predicted at `position` (1-based token index
/// into the caption, so position 0, the begin sentinel, never appears).
struct LocalizedOccurrence {
  int word_index = 0;
  std::string language;
  std::uint64_t image_id = 0;
  std::size_t position = 0;
  Vector feature;  // D
  Vector weights;  // K, non-negative, sums to one
};

/// sum_k alpha_k a_k; the single place features are composed from weights.
Vector recompose(const Vector& alpha, const EncodedImage& regions);

/// Occlusion probe: one teacher-forced decode per region, each seeing only
/// that region; gold-token probabilities are normalized across regions and
/// weight the original region features. One occurrence per predicted token.
std::vector<LocalizedOccurrence> localize(const MultiLingualModel& model, const std::string& language,
                                          const EncodedImage& regions, std::uint64_t image_id,
                                          const TokenSeq& caption);
std::vector<LocalizedOccurrence> localize(const MultiLingualModel& model, const std::string& language,
                                          const SpatialImage& image, const TokenSeq& caption);

/// Attention context computed before each word is emitted.
std::vector<LocalizedOccurrence> localize_by_attention(const MultiLingualModel& model,
                                                       const std::string& language,
                                                       const EncodedImage& regions,
                                                       std::uint64_t image_id, const TokenSeq& caption);
std::vector<LocalizedOccurrence> localize_by_attention(const MultiLingualModel& model,
                                                       const std::string& language,
                                                       const SpatialImage& image, const TokenSeq& caption);

std::vector<LocalizedOccurrence> localize_with(LocalizationMethod method, const MultiLingualModel& model,
                                               const std::string& language, const SpatialImage& image,
                                               const TokenSeq& caption);

}  // namespace lexipivot
