#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>

#include "lexipivot/corpus/vocabulary.hpp"

namespace lexipivot {

/// Source word -> acceptable target words, with optional POS tags.
struct GroundTruthLexicon {
  std::map<std::string, std::set<std::string>> entries;
  std::map<std::string, std::string> pos;

  void add(const std::string& source, const std::string& target, const std::string& tag = {});

  std::size_t pair_count() const noexcept;
  std::string pos_of(const std::string& source) const;

  /// Drops pairs whose words are missing from either vocabulary, and sources
  /// left with no target.
  GroundTruthLexicon restricted_to(const Vocabulary& source, const Vocabulary& target) const;
  GroundTruthLexicon with_pos(const std::set<std::string>& tags) const;

  bool operator==(const GroundTruthLexicon&) const = default;
};

}  // namespace lexipivot
