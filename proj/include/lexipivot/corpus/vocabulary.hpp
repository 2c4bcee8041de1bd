#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lexipivot/corpus/types.hpp"

namespace lexipivot {

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kBegin = 1;
  static constexpr int kEnd = 2;
  static constexpr int kUnknown = 3;
  static constexpr int kReservedCount = 4;

  Vocabulary() = default;

  /// Keeps words with count >= min_count, ordered by descending count then
  /// lexicographically. Throws InputError on an empty or mixed-language list.
  static Vocabulary build(std::span<const Caption> captions, std::size_t min_count = 6);

  /// Words in index order (reserved tokens excluded).
  static Vocabulary from_words(std::string language,
                               std::vector<std::pair<std::string, std::size_t>> words);

  const std::string& language() const noexcept { return language_; }
  std::size_t size() const noexcept { return index_to_word_.size(); }
  std::size_t word_count() const noexcept { return size() - kReservedCount; }

  std::optional<int> find(const std::string& word) const;
  int index_of(const std::string& word) const;
  const std::string& word(int index) const;
  std::size_t count(int index) const;
  static bool is_reserved(int index) noexcept { return index >= 0 && index < kReservedCount; }

  /// [begin, words..., end]. Throws InputError when the result exceeds max_len.
  TokenSeq encode(const Caption& caption, std::size_t max_len) const;

  bool operator==(const Vocabulary&) const = default;

 private:
  std::string language_;
  std::vector<std::string> index_to_word_;
  std::vector<std::size_t> counts_;
  std::map<std::string, int, std::less<>> word_to_index_;
};

std::vector<CaptionedExample> encode_captions(std::span<const Caption> captions,
                                              const Vocabulary& vocab, std::size_t max_len);

}  // namespace lexipivot
