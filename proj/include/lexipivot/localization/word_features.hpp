#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lexipivot/corpus/vocabulary.hpp"
#include "lexipivot/localization/localize.hpp"
#include "lexipivot/model/sequence_loss.hpp"

namespace lexipivot {

/// Per-word sets of feature vectors. Aggregated tables hold exactly one
/// vector per word.
struct WordFeatureSet {
  std::string language;
  std::size_t dim = 0;
  bool aggregated = false;
  std::map<std::string, std::vector<std::vector<float>>> words;

  std::size_t occurrence_count() const noexcept;
  bool operator==(const WordFeatureSet&) const = default;
};

struct CollectionOptions {
  LocalizationMethod method = LocalizationMethod::probe;
  /// Keep at most this many occurrences per word, chosen uniformly at random.
  std::optional<std::size_t> cap;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

struct CollectedFeatures {
  WordFeatureSet localized;
  /// Mean of the image's encoded regions, one per kept occurrence, for the
  /// whole-image baselines.
  WordFeatureSet global;
  std::size_t occurrences_seen = 0;
};

/// Runs the chosen localization over every caption (in the given order) and
/// groups occurrence features by word. Sentinels and the unknown token are
/// skipped. Output does not depend on the thread count.
CollectedFeatures collect_word_features(const MultiLingualModel& model, const Vocabulary& vocab,
                                        std::span<const TrainingExample> captions,
                                        const CollectionOptions& options = {});

/// Whole-image feature: the mean of the encoded regions.
std::vector<float> global_image_feature(const EncodedImage& regions);

/// LXWF: "LXWF", u32 version, language, u32 flags (bit 0: aggregated),
/// u32 dim, u32 word count; per word: word, u32 count, count*dim f32.
std::string serialize_word_features(const WordFeatureSet& set);
WordFeatureSet deserialize_word_features(std::string_view bytes, const std::string& source = "word features");
void write_word_features(const std::filesystem::path& path, const WordFeatureSet& set);
WordFeatureSet read_word_features(const std::filesystem::path& path);

}  // namespace lexipivot
