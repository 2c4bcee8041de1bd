#pragma once

#include <span>
#include <string>
#include <vector>

namespace lexipivot {

using Sentence = std::vector<std::string>;

/// Corpus-level BLEU-4 on a 0-100 scale: clipped n-gram precisions against
/// all references of each candidate, geometric mean, brevity penalty from the
/// closest reference length. No smoothing. Throws InputError on an empty or
/// misaligned corpus.
double bleu4(std::span<const Sentence> candidates, std::span<const std::vector<Sentence>> references);

}  // namespace lexipivot
