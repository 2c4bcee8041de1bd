#include "lexipivot/corpus/vocabulary.hpp"

#include <algorithm>

#include "lexipivot/error.hpp"

namespace lexipivot {

namespace {
const std::vector<std::string> kReservedWords = {"<pad>", "<s>", "</s>", "<unk>"};
}

Vocabulary Vocabulary::build(std::span<const Caption> captions, std::size_t min_count) {
  if (captions.empty()) throw InputError("cannot build a vocabulary from no captions");
  const std::string& language = captions.front().language;
  std::map<std::string, std::size_t> counts;
  for (const auto& c : captions) {
    if (c.language != language) {
      throw InputError("vocabulary input mixes languages \"" + language + "\" and \"" +
                       c.language + "\"");
    }
    for (const auto& w : c.words) ++counts[w];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [w, n] : counts) {
    if (n >= min_count) kept.emplace_back(w, n);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  return from_words(language, std::move(kept));
}

Vocabulary Vocabulary::from_words(std::string language,
                                  std::vector<std::pair<std::string, std::size_t>> words) {
  Vocabulary v;
  v.language_ = std::move(language);
  v.index_to_word_ = kReservedWords;
  v.counts_.assign(kReservedCount, 0);
  for (int i = 0; i < kReservedCount; ++i) v.word_to_index_.emplace(kReservedWords[i], i);
  for (auto& [w, n] : words) {
    const int index = static_cast<int>(v.index_to_word_.size());
    if (!v.word_to_index_.emplace(w, index).second) {
      throw InputError("duplicate vocabulary word \"" + w + "\"");
    }
    v.index_to_word_.push_back(std::move(w));
    v.counts_.push_back(n);
  }
  return v;
}

std::optional<int> Vocabulary::find(const std::string& word) const {
  auto it = word_to_index_.find(word);
  if (it == word_to_index_.end() || is_reserved(it->second)) return std::nullopt;
  return it->second;
}

int Vocabulary::index_of(const std::string& word) const {
  return find(word).value_or(kUnknown);
}

const std::string& Vocabulary::word(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= index_to_word_.size()) {
    throw BoundsError("vocabulary index " + std::to_string(index) + " outside " +
                      std::to_string(index_to_word_.size()));
  }
  return index_to_word_[static_cast<std::size_t>(index)];
}

std::size_t Vocabulary::count(int index) const {
  word(index);
  return counts_[static_cast<std::size_t>(index)];
}

TokenSeq Vocabulary::encode(const Caption& caption, std::size_t max_len) const {
  TokenSeq tokens;
  tokens.reserve(caption.words.size() + 2);
  tokens.push_back(kBegin);
  for (const auto& w : caption.words) tokens.push_back(index_of(w));
  tokens.push_back(kEnd);
  if (tokens.size() > max_len) {
    throw InputError("caption of scene " + std::to_string(caption.scene_id) + " has " +
                     std::to_string(tokens.size()) + " tokens, limit is " +
                     std::to_string(max_len));
  }
  return tokens;
}

std::vector<CaptionedExample> encode_captions(std::span<const Caption> captions,
                                              const Vocabulary& vocab, std::size_t max_len) {
  std::vector<CaptionedExample> out;
  out.reserve(captions.size());
  for (const auto& c : captions) {
    if (c.language != vocab.language()) {
      throw InputError("caption language \"" + c.language + "\" does not match vocabulary \"" +
                       vocab.language() + "\"");
    }
    out.push_back(CaptionedExample{c.scene_id, c.language, vocab.encode(c, max_len), c.raw_text()});
  }
  return out;
}

}  // namespace lexipivot
