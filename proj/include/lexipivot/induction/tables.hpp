#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lexipivot/corpus/vocabulary.hpp"
#include "lexipivot/localization/word_features.hpp"
#include "lexipivot/model/caption_model.hpp"

namespace lexipivot {

struct WordEntry {
  Vector linguistic;            // unit norm; empty when the word has no embedding in scope
  std::optional<Vector> visual;  // unit norm mean of the occurrence set
  std::size_t occurrences = 0;
};

/// Unit-normalized word representations of one language.
class WordFeatureTable {
 public:
  WordFeatureTable() = default;
  explicit WordFeatureTable(std::string language) : language_(std::move(language)) {}

  /// Combines an aggregated linguistic table with an occurrence table (either
  /// may be null). Words whose mean visual vector is zero get no visual slot.
  /// With `normalize_occurrences` each occurrence is normalized before the mean.
  static WordFeatureTable build(const WordFeatureSet* linguistic, const WordFeatureSet* visual,
                                bool normalize_occurrences = false);

  const std::string& language() const noexcept { return language_; }
  bool contains(const std::string& word) const noexcept { return entries_.count(word) != 0; }
  /// Throws LookupError.
  const WordEntry& at(const std::string& word) const;
  const std::map<std::string, WordEntry>& entries() const noexcept { return entries_; }
  std::vector<std::string> words() const;

  /// Normalizes; throws NumericError on a zero or non-finite vector.
  void set_linguistic(const std::string& word, const Vector& v);
  /// Normalizes; a zero mean leaves the word without a visual slot.
  void set_visual(const std::string& word, const Vector& mean, std::size_t occurrences);

 private:
  std::string language_;
  std::map<std::string, WordEntry> entries_;
};

/// Embedding columns of every non-reserved vocabulary word, as an
/// aggregated table.
WordFeatureSet linguistic_features(const MultiLingualModel& model, const Vocabulary& vocab);

/// Means each word's occurrence set into an aggregated table.
WordFeatureSet aggregate(const WordFeatureSet& occurrences);

/// Unit-normalized occurrence vectors per word, for set-to-set baselines.
/// Identical vectors are stored once in `pool`; each word keeps one index per
/// occurrence, so repeats still weigh into averages.
struct OccurrenceSets {
  std::string language;
  std::vector<Vector> pool;
  std::map<std::string, std::vector<std::size_t>> words;

  static OccurrenceSets build(const WordFeatureSet& occurrences);
};

}  // namespace lexipivot
