#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "lexipivot/corpus/lexicon.hpp"
#include "lexipivot/induction/ranking.hpp"

namespace lexipivot {

struct EvalReport {
  std::string method;
  std::string pos = "all";
  std::size_t n = 0;
  /// Rankings without a lexicon entry, or whose translations are all out of
  /// the target vocabulary.
  std::size_t skipped = 0;
  double mrr = 0.0;
  std::map<std::size_t, double> precision;  // K -> fraction in [0, 1]
};

inline const std::vector<std::size_t> kDefaultKs = {1, 5, 10, 20};

/// Best-translation MRR and P@K. A translation in `target_vocabulary` that is
/// missing from a (truncated) ranking counts as unranked. When the vocabulary
/// is empty each ranking's own candidates define it. Throws EvaluationError if
/// nothing is evaluable.
EvalReport evaluate(std::span<const TranslationRanking> rankings, const GroundTruthLexicon& lexicon,
                    std::span<const std::size_t> ks = kDefaultKs,
                    const std::set<std::string>& target_vocabulary = {});

/// One report per POS tag (untagged sources under "unk"), sorted by tag.
std::vector<EvalReport> pos_breakdown(std::span<const TranslationRanking> rankings,
                                      const GroundTruthLexicon& lexicon,
                                      std::span<const std::size_t> ks = kDefaultKs,
                                      const std::set<std::string>& target_vocabulary = {});

/// Rankings whose source carries one of the tags.
std::vector<TranslationRanking> filter_by_pos(std::span<const TranslationRanking> rankings,
                                              const GroundTruthLexicon& lexicon,
                                              const std::set<std::string>& tags);

/// CSV with header method,pos,n,mrr,p1,p5,p10,p20 (precision as percent).
std::string format_report_csv(std::span<const EvalReport> reports);
std::string format_report_json(std::span<const EvalReport> reports);

}  // namespace lexipivot
