#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lexipivot/corpus/lexicon.hpp"
#include "lexipivot/corpus/types.hpp"
#include "lexipivot/corpus/vocabulary.hpp"

namespace lexipivot {

using FeatureMap = std::map<std::uint64_t, SpatialImage>;

// Spatial features (LXPF): "LXPF", u32 version, u32 image count, u32 K, u32 D,
// then per image u64 id followed by K*D f32 values.
std::string serialize_features(const FeatureMap& features);
FeatureMap deserialize_features(std::string_view bytes, const std::string& source = "features");
void write_features(const std::filesystem::path& path, const FeatureMap& features);
FeatureMap read_features(const std::filesystem::path& path);

// Captions: "image_id\tlanguage\ttext" per line.
std::string format_captions(const std::vector<Caption>& captions);
void write_captions(const std::filesystem::path& path, const std::vector<Caption>& captions);
/// Whitespace tokenization with ASCII lowercasing. Records whose language
/// differs from `language` are skipped when it is set; ids absent from
/// `known_images` raise FormatError with the line number.
std::vector<Caption> read_captions(const std::filesystem::path& path,
                                   const std::optional<std::string>& language = std::nullopt,
                                   const FeatureMap* known_images = nullptr);
std::vector<std::string> tokenize(const std::string& text);

// Lexicon: "source\ttarget[\tpos]" per line.
void write_lexicon(const std::filesystem::path& path, const GroundTruthLexicon& lexicon);
GroundTruthLexicon read_lexicon(const std::filesystem::path& path);

// Vocabulary: "index\tword\tcount" per line, reserved tokens first.
void write_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab);
Vocabulary read_vocabulary(const std::filesystem::path& path, const std::string& language);

struct ExternalDataset {
  FeatureMap features;
  std::vector<Caption> captions;
};

ExternalDataset load_external_dataset(const std::filesystem::path& features_path,
                                      const std::filesystem::path& captions_path,
                                      const std::string& language);

}  // namespace lexipivot
