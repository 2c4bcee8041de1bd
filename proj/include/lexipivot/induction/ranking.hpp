#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lexipivot/induction/tables.hpp"

namespace lexipivot {

enum class RankingMethod { linguistic, visual, fused, cnn_mean, cnn_avgmax };

const char* to_string(RankingMethod method) noexcept;
/// Throws ConfigError.
RankingMethod ranking_method_from_string(const std::string& name);
std::vector<RankingMethod> all_ranking_methods();

struct Candidate {
  std::string word;
  double score = 0.0;
  bool operator==(const Candidate&) const = default;
};

/// Descending score, ties by target word.
struct TranslationRanking {
  std::string source;
  RankingMethod method = RankingMethod::fused;
  std::vector<Candidate> candidates;

  /// 1-based rank of a target, or nullopt when absent.
  std::optional<std::size_t> rank_of(const std::string& target) const;
};

void sort_candidates(std::vector<Candidate>& candidates);

/// Cosine of the unit-normalized embedding vectors. Throws LookupError.
double linguistic_similarity(const WordFeatureTable& source, const WordFeatureTable& target,
                             const std::string& x, const std::string& y);
/// Cosine of the mean visual vectors. Throws LookupError for unknown words
/// and NoVisualError when either word lacks a visual vector.
double visual_similarity(const WordFeatureTable& source, const WordFeatureTable& target,
                         const std::string& x, const std::string& y);
/// Mean over source occurrences of the best cosine against any target
/// occurrence. Throws NoVisualError on an empty set.
double avgmax_similarity(const OccurrenceSets& source, const OccurrenceSets& target, const std::string& x,
                         const std::string& y);

struct FusionOptions {
  /// score = lambda * s_l + (1 - lambda) * s_i
  double lambda = 0.5;
};

struct FusionStats {
  std::size_t pairs = 0;
  /// Pairs scored without a visual term because one side had no visual vector.
  std::size_t fallback_pairs = 0;
};

TranslationRanking linguistic_rank(const std::string& x, const WordFeatureTable& source,
                                   const WordFeatureTable& target, std::span<const std::string> targets);
/// Targets without a visual vector are left out.
TranslationRanking visual_rank(const std::string& x, const WordFeatureTable& source,
                               const WordFeatureTable& target, std::span<const std::string> targets);
/// An undefined visual term counts as zero for that pair.
TranslationRanking fused_rank(const std::string& x, const WordFeatureTable& source,
                              const WordFeatureTable& target, std::span<const std::string> targets,
                              const FusionOptions& options = {}, FusionStats* stats = nullptr);
/// Visual ranking over whole-image (global) tables.
TranslationRanking cnn_mean_rank(const std::string& x, const WordFeatureTable& source_global,
                                 const WordFeatureTable& target_global, std::span<const std::string> targets);
TranslationRanking cnn_avgmax_rank(const std::string& x, const OccurrenceSets& source_global,
                                   const OccurrenceSets& target_global, std::span<const std::string> targets);

/// Everything the ranking methods read, for both languages.
struct InductionTables {
  WordFeatureTable source;         // linguistic + localized visual
  WordFeatureTable target;
  WordFeatureTable source_global;  // whole-image means
  WordFeatureTable target_global;
  OccurrenceSets source_sets;      // whole-image occurrence sets
  OccurrenceSets target_sets;
};

struct RankingRun {
  std::vector<TranslationRanking> rankings;
  /// Source words the method could not score (no visual vector).
  std::vector<std::string> skipped;
  FusionStats fusion;
};

/// Ranks every source word against `targets` (all target words when empty).
/// cnn_avgmax precomputes a Gram matrix of distinct global vectors.
RankingRun rank_all(RankingMethod method, const InductionTables& tables, std::span<const std::string> sources,
                    std::span<const std::string> targets = {}, const FusionOptions& options = {});

/// One line per ranking: source TAB method TAB target:score,... (6 decimals).
/// top_n = 0 writes full lists.
std::string format_rankings(std::span<const TranslationRanking> rankings, std::size_t top_n = 20);
/// Throws FormatError with the line number.
std::vector<TranslationRanking> parse_rankings(const std::string& text, const std::string& source = "rankings");

}  // namespace lexipivot
