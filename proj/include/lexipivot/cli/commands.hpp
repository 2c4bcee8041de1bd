#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "lexipivot/cli/config.hpp"
#include "lexipivot/corpus/formats.hpp"
#include "lexipivot/induction/evaluate.hpp"
#include "lexipivot/model/training.hpp"

namespace lexipivot::cli {

namespace fs = std::filesystem;

/// On-disk corpus: a directory with corpus.json naming the feature file and,
/// per language, its captions and vocabulary.
struct CorpusDescriptor {
  std::string source_language;
  std::string target_language;
  std::string features = "features.lxpf";
  std::map<std::string, std::string> captions;
  std::map<std::string, std::string> vocabularies;
  std::string lexicon = "lexicon.tsv";

  std::vector<std::string> languages() const { return {source_language, target_language}; }
  static CorpusDescriptor read(const fs::path& dir);
  void write(const fs::path& dir) const;
};

/// A loaded corpus with encoded captions pointing into `features`.
struct LoadedCorpus {
  fs::path dir;
  CorpusDescriptor descriptor;
  FeatureMap features;
  std::map<std::string, Vocabulary> vocabularies;
  std::map<std::string, std::vector<TrainingExample>> examples;

  std::size_t regions() const;
  std::size_t feature_dim() const;
};

LoadedCorpus load_corpus(const fs::path& dir, std::size_t max_len);

struct TrainOptions {
  /// Train only this language; otherwise every corpus language.
  std::optional<std::string> mono;
};

struct TrainOutcome {
  TrainingLog log;
  fs::path checkpoint;
};

void cmd_gen_corpus(const RunConfig& config, const fs::path& out);
TrainOutcome cmd_train(const RunConfig& config, const fs::path& corpus_dir, const fs::path& out,
                       const TrainOptions& options = {});
void cmd_extract(const RunConfig& config, const fs::path& checkpoint, const fs::path& corpus_dir, const fs::path& out,
                 std::size_t threads = 1);
std::vector<EvalReport> cmd_induce(const RunConfig& config, const fs::path& features_dir, const fs::path& lexicon,
                                   const fs::path& out, std::size_t threads = 1);
std::vector<EvalReport> cmd_eval(const RunConfig& config, const fs::path& rankings, const fs::path& lexicon,
                                 const std::optional<fs::path>& target_vocabulary, const fs::path& out);
/// gen-corpus, train (multi-lingual), extract and induce into out/{corpus,
/// model,features,induction}.
std::vector<EvalReport> cmd_pipeline(const RunConfig& config, const fs::path& out, std::size_t threads = 1);

/// Report rows for one method: all, configured POS groups, then each tag.
std::vector<EvalReport> method_reports(std::span<const TranslationRanking> rankings, const GroundTruthLexicon& lexicon,
                                       const InductionConfig& config, const std::set<std::string>& target_vocabulary);

/// 0 ok, 2 config, 3 io/format, 4 numeric or empty result, 1 otherwise.
int exit_code_for(const std::exception& e) noexcept;

/// stderr logger; LEXIPIVOT_LOG=error|warn|info|debug sets the level.
void configure_logging();

/// Full command line entry point; errors go to stderr as one
/// "lexipivot-error: ..." line.
int run(int argc, char** argv);

}  // namespace lexipivot::cli
