#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lexipivot/corpus/lexicon.hpp"
#include "lexipivot/corpus/types.hpp"
#include "lexipivot/numerics/eigen.hpp"

namespace lexipivot {

struct CorpusConfig {
  std::size_t concepts = 50;
  std::size_t attributes = 5;
  std::size_t verbs = 3;
  std::size_t grid_side = 3;
  std::size_t feature_dim = 32;
  std::size_t images_per_language = 2000;
  /// Image count for the target language; 0 means images_per_language.
  std::size_t target_images = 0;
  std::size_t captions_per_image = 5;
  /// Concepts are grouped into fixed contexts of this size; a scene shows one
  /// whole context unless it is a single-object scene.
  std::size_t context_size = 2;
  /// Fraction of scenes showing a single member of their context group.
  double single_object_rate = 0.2;
  /// Probability that a clause uses its noun's preferred verb (concept id
  /// modulo verbs) instead of a uniformly drawn one.
  double verb_affinity = 0.8;
  bool disjoint_images = true;
  double noise_sigma = 0.1;
  double attribute_scale = 0.5;
  std::size_t max_len = 16;
  std::string source_language = "src";
  std::string target_language = "tgt";

  std::size_t images_for(std::size_t language_index) const noexcept {
    return language_index == 1 && target_images > 0 ? target_images : images_per_language;
  }
  /// Throws ConfigError.
  void validate() const;
};

enum class AttributePlacement { before_noun, after_noun };

/// Word forms and constituent order of one synthetic language.
struct SyntheticLanguageSpec {
  std::string language_id;
  std::vector<std::string> concept_words;
  std::vector<std::string> attribute_words;
  std::string determiner;
  std::string conjunction;
  std::vector<std::string> verbs;
  AttributePlacement placement = AttributePlacement::before_noun;
  std::map<std::string, std::string> pos_of_word;

  std::vector<std::string> function_words() const;
  std::vector<std::string> all_words() const;

  /// One clause per slot in `order`: determiner, attribute/noun in this
  /// language's order, then a verb; clauses are joined by the conjunction.
  std::vector<std::string> realize(const Scene& scene, const std::vector<std::size_t>& order,
                                   const std::vector<std::size_t>& verb_choice) const;
};

/// Fixed unit-norm prototypes drawn once per corpus.
class FeatureRenderer {
 public:
  FeatureRenderer(std::size_t concepts, std::size_t attributes, std::size_t feature_dim,
                  double attribute_scale, std::uint64_t seed);

  /// Populated region = concept prototype + attribute offsets + noise; empty
  /// region = background + noise.
  SpatialImage render(const Scene& scene, double noise_sigma, std::uint64_t noise_seed) const;

  std::size_t feature_dim() const noexcept { return feature_dim_; }
  const Vector& concept_prototype(std::size_t c) const { return concepts_.at(c); }
  const Vector& background() const noexcept { return background_; }

 private:
  std::size_t feature_dim_;
  std::vector<Vector> concepts_;
  std::vector<Vector> attributes_;
  Vector background_;
};

struct LanguageCorpus {
  SyntheticLanguageSpec spec;
  std::vector<Scene> scenes;
  std::vector<Caption> captions;
};

struct SyntheticCorpus {
  CorpusConfig config;
  std::uint64_t seed = 0;
  std::vector<LanguageCorpus> languages;  // source first, then target
  std::map<std::uint64_t, SpatialImage> features;
  GroundTruthLexicon lexicon;

  const LanguageCorpus& language(const std::string& id) const;
  const Scene& scene(std::uint64_t scene_id) const;
};

/// Pure function of (config, seed).
SyntheticCorpus generate_corpus(const CorpusConfig& config, std::uint64_t seed);

}  // namespace lexipivot
