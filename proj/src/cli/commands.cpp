#include "lexipivot/cli/commands.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "lexipivot/binary_io.hpp"
#include "lexipivot/cli/manifest.hpp"
#include "lexipivot/error.hpp"
#include "lexipivot/induction/tables.hpp"
#include "lexipivot/localization/word_features.hpp"
#include "lexipivot/model/checkpoint.hpp"

namespace lexipivot::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void write_text(const fs::path& path, const std::string& text, RunManifest* manifest = nullptr) {
  write_file_atomic(path, text);
  if (manifest) manifest->add_output(path);
}

void prepare_out(const fs::path& out, const RunConfig& config) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
  write_text(out / "config.json", to_json(config).dump(2) + "\n");
}

json parse_json_file(const fs::path& path) {
  try {
    return json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string features_file(const std::string& language, const std::string& kind) {
  return language + "." + kind + ".lxwf";
}

}  // namespace

CorpusDescriptor CorpusDescriptor::read(const fs::path& dir) {
  const auto path = dir / "corpus.json";
  const auto j = parse_json_file(path);
  try {
    CorpusDescriptor d;
    d.source_language = j.at("source_language").get<std::string>();
    d.target_language = j.at("target_language").get<std::string>();
    d.features = j.at("features").get<std::string>();
    d.captions = j.at("captions").get<std::map<std::string, std::string>>();
    d.vocabularies = j.at("vocabularies").get<std::map<std::string, std::string>>();
    d.lexicon = j.value("lexicon", d.lexicon);
    for (const auto& lang : d.languages()) {
      if (!d.captions.count(lang) || !d.vocabularies.count(lang)) {
        throw FormatError(path.string() + ": no captions or vocabulary for \"" + lang + "\"");
      }
    }
    return d;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void CorpusDescriptor::write(const fs::path& dir) const {
  const ordered_json j{{"source_language", source_language}, {"target_language", target_language},
                       {"features", features},               {"captions", captions},
                       {"vocabularies", vocabularies},       {"lexicon", lexicon}};
  write_text(dir / "corpus.json", j.dump(2) + "\n");
}

std::size_t LoadedCorpus::regions() const { return features.empty() ? 0 : features.begin()->second.regions; }
std::size_t LoadedCorpus::feature_dim() const { return features.empty() ? 0 : features.begin()->second.dim; }

LoadedCorpus load_corpus(const fs::path& dir, std::size_t max_len) {
  LoadedCorpus c;
  c.dir = dir;
  c.descriptor = CorpusDescriptor::read(dir);
  c.features = read_features(dir / c.descriptor.features);
  if (c.features.empty()) throw InputError(dir.string() + ": corpus has no images");
  for (const auto& lang : c.descriptor.languages()) {
    const auto vocab = read_vocabulary(dir / c.descriptor.vocabularies.at(lang), lang);
    const auto captions = read_captions(dir / c.descriptor.captions.at(lang), lang, &c.features);
    auto& out = c.examples[lang];
    for (const auto& cap : captions) {
      out.push_back(TrainingExample{lang, &c.features.at(cap.scene_id), vocab.encode(cap, max_len)});
    }
    c.vocabularies.emplace(lang, vocab);
  }
  return c;
}

void cmd_gen_corpus(const RunConfig& config, const fs::path& out) {
  StageTimer timer;
  prepare_out(out, config);
  RunManifest manifest("gen-corpus", config_hash(config), config.seed, out);
  const auto corpus = generate_corpus(config.corpus, stage_seed(config, "corpus"));

  CorpusDescriptor d;
  d.source_language = config.corpus.source_language;
  d.target_language = config.corpus.target_language;
  write_features(out / d.features, corpus.features);
  manifest.add_output(out / d.features);
  for (const auto& lang : corpus.languages) {
    const auto& id = lang.spec.language_id;
    d.captions[id] = "captions." + id + ".tsv";
    d.vocabularies[id] = "vocab." + id + ".tsv";
    write_captions(out / d.captions[id], lang.captions);
    write_vocabulary(out / d.vocabularies[id], Vocabulary::build(lang.captions, config.min_count));
    manifest.add_output(out / d.captions[id]);
    manifest.add_output(out / d.vocabularies[id]);
  }
  write_lexicon(out / d.lexicon, corpus.lexicon);
  manifest.add_output(out / d.lexicon);
  d.write(out);
  manifest.add_output(out / "corpus.json");
  manifest.add_timing("gen-corpus", timer.seconds());
  manifest.write();
  spdlog::info("wrote corpus with {} images to {}", corpus.features.size(), out.string());
}

TrainOutcome cmd_train(const RunConfig& config, const fs::path& corpus_dir, const fs::path& out,
                       const TrainOptions& options) {
  StageTimer timer;
  prepare_out(out, config);
  RunManifest manifest(options.mono ? "train --mono " + *options.mono : "train --multi", config_hash(config),
                       config.seed, out);
  auto corpus = load_corpus(corpus_dir, config.model.max_len);
  manifest.add_input(corpus_dir / "corpus.json");
  manifest.add_input(corpus_dir / corpus.descriptor.features);

  std::vector<std::string> languages = corpus.descriptor.languages();
  if (options.mono) {
    if (!corpus.vocabularies.count(*options.mono)) {
      throw LookupError("language \"" + *options.mono + "\" is not in the corpus");
    }
    languages = {*options.mono};
  }

  ModelConfig mc = config.model;
  mc.dims.input_dim = corpus.feature_dim();
  mc.dims.regions = corpus.regions();
  std::vector<LanguageSpec> specs;
  std::vector<LanguageSplit> splits;
  CheckpointInfo info{config.seed, {}};
  for (const auto& lang : languages) {
    specs.push_back({lang, corpus.vocabularies.at(lang).size()});
    splits.push_back(split_examples(lang, corpus.examples.at(lang), config.val_fraction));
    const auto vocab_path = corpus_dir / corpus.descriptor.vocabularies.at(lang);
    info.vocabulary_files[lang] = fs::relative(vocab_path, out).generic_string();
    manifest.add_input(corpus_dir / corpus.descriptor.captions.at(lang));
    spdlog::info("{}: {} training and {} validation captions", lang, splits.back().train.size(),
                 splits.back().val.size());
  }

  MultiLingualModel model(mc, specs, stage_seed(config, "init"));
  TrainingConfig tc = config.training;
  tc.seed = stage_seed(config, "shuffle");
  const auto log = train(model, splits, tc, [](const std::vector<EpochRecord>& rows) {
    for (const auto& r : rows) {
      spdlog::info("epoch {} {}: train {:.4f} val {:.4f}", r.epoch, r.language, r.train_loss, r.val_loss);
    }
  });

  std::string csv = "epoch,language,train_loss,val_loss\n";
  for (const auto& r : log.rows) {
    csv += std::to_string(r.epoch) + "," + r.language + "," + fixed6(r.train_loss) + "," + fixed6(r.val_loss) + "\n";
  }
  write_text(out / "training_log.csv", csv, &manifest);
  TrainOutcome outcome{log, out / "model.lxpv"};
  save_checkpoint(outcome.checkpoint, model, info);
  manifest.add_output(outcome.checkpoint);
  manifest.add_output(sidecar_path(outcome.checkpoint));
  manifest.set_note("best_epoch", std::to_string(log.best_epoch));
  manifest.set_note("best_val_loss", fixed6(log.best_val_loss));
  manifest.add_timing("train", timer.seconds());
  manifest.write();
  spdlog::info("best epoch {} (val loss {:.4f}) after {} epochs", log.best_epoch, log.best_val_loss, log.epochs_run);
  return outcome;
}

void cmd_extract(const RunConfig& config, const fs::path& checkpoint, const fs::path& corpus_dir, const fs::path& out,
                 std::size_t threads) {
  StageTimer timer;
  prepare_out(out, config);
  RunManifest manifest(std::string("extract --method ") + to_string(config.extraction.method), config_hash(config),
                       config.seed, out);
  const auto loaded = load_checkpoint(checkpoint);
  const auto& model = loaded.model;
  manifest.add_input(checkpoint);
  auto corpus = load_corpus(corpus_dir, model.config().max_len);
  const auto& dims = model.config().dims;
  if (corpus.regions() != dims.regions || corpus.feature_dim() != dims.input_dim) {
    throw ConfigError("checkpoint expects " + std::to_string(dims.regions) + " regions of dim " +
                      std::to_string(dims.input_dim) + ", corpus has " + std::to_string(corpus.regions()) +
                      " regions of dim " + std::to_string(corpus.feature_dim()));
  }

  const auto method = to_string(config.extraction.method);
  ordered_json descriptor{{"source_language", corpus.descriptor.source_language},
                          {"target_language", corpus.descriptor.target_language},
                          {"method", method}};
  for (const auto& lang : corpus.descriptor.languages()) {
    if (!model.has_language(lang)) throw LookupError("checkpoint has no embedding for \"" + lang + "\"");
    const auto& vocab = corpus.vocabularies.at(lang);
    CollectionOptions opt;
    opt.method = config.extraction.method;
    opt.cap = config.extraction.cap;
    opt.seed = derive_seed(stage_seed(config, "subsample"), lang);
    opt.threads = threads;
    StageTimer lang_timer;
    const auto collected = collect_word_features(model, vocab, corpus.examples.at(lang), opt);
    const auto files = {std::pair{features_file(lang, method), &collected.localized},
                        std::pair{features_file(lang, "global"), &collected.global}};
    for (const auto& [name, set] : files) {
      write_word_features(out / name, *set);
      manifest.add_output(out / name);
    }
    const auto ling_name = features_file(lang, "linguistic");
    write_word_features(out / ling_name, linguistic_features(model, vocab));
    manifest.add_output(out / ling_name);
    descriptor["languages"][lang] = {{"localized", features_file(lang, method)},
                                     {"global", features_file(lang, "global")},
                                     {"linguistic", ling_name},
                                     {"occurrences", collected.occurrences_seen}};
    manifest.add_timing("extract " + lang, lang_timer.seconds());
    spdlog::info("{}: {} occurrences over {} words", lang, collected.localized.occurrence_count(),
                 collected.localized.words.size());
  }
  write_text(out / "features.json", descriptor.dump(2) + "\n", &manifest);
  manifest.add_timing("extract", timer.seconds());
  manifest.write();
}

std::vector<EvalReport> method_reports(std::span<const TranslationRanking> rankings, const GroundTruthLexicon& lexicon,
                                       const InductionConfig& config, const std::set<std::string>& target_vocabulary) {
  std::vector<EvalReport> out;
  out.push_back(evaluate(rankings, lexicon, kDefaultKs, target_vocabulary));
  for (const auto& group : config.pos_groups) {
    std::string label;
    for (const auto& tag : group) label += (label.empty() ? "" : "+") + tag;
    const auto subset = filter_by_pos(rankings, lexicon, {group.begin(), group.end()});
    try {
      auto r = evaluate(subset, lexicon, kDefaultKs, target_vocabulary);
      r.method = out.front().method;
      r.pos = label;
      out.push_back(std::move(r));
    } catch (const EvaluationError&) {
      spdlog::warn("no evaluable words for POS group {}", label);
    }
  }
  for (auto& r : pos_breakdown(rankings, lexicon, kDefaultKs, target_vocabulary)) out.push_back(std::move(r));
  return out;
}

std::vector<EvalReport> cmd_induce(const RunConfig& config, const fs::path& features_dir, const fs::path& lexicon_path,
                                   const fs::path& out, std::size_t /*threads*/) {
  StageTimer timer;
  prepare_out(out, config);
  RunManifest manifest("induce", config_hash(config), config.seed, out);
  const auto descriptor = parse_json_file(features_dir / "features.json");
  std::string src, tgt;
  InductionTables tables;
  try {
    src = descriptor.at("source_language").get<std::string>();
    tgt = descriptor.at("target_language").get<std::string>();
    auto load = [&](const std::string& lang, const char* kind) {
      const auto path = features_dir / descriptor.at("languages").at(lang).at(kind).get<std::string>();
      manifest.add_input(path);
      return read_word_features(path);
    };
    const bool norm = config.induction.normalize_occurrences;
    for (const auto& [lang, table, global, sets] :
         {std::tuple{src, &tables.source, &tables.source_global, &tables.source_sets},
          std::tuple{tgt, &tables.target, &tables.target_global, &tables.target_sets}}) {
      const auto ling = load(lang, "linguistic");
      const auto local = load(lang, "localized");
      const auto glob = load(lang, "global");
      *table = WordFeatureTable::build(&ling, &local, norm);
      *global = WordFeatureTable::build(&ling, &glob, norm);
      *sets = OccurrenceSets::build(glob);
    }
  } catch (const json::exception& e) {
    throw FormatError((features_dir / "features.json").string() + ": " + e.what());
  }
  const auto lexicon = read_lexicon(lexicon_path);
  manifest.add_input(lexicon_path);

  const auto sources = tables.source.words();
  const auto targets = tables.target.words();
  const std::set<std::string> target_vocab(targets.begin(), targets.end());
  std::size_t uncovered = 0;
  for (const auto& [word, _] : lexicon.entries) uncovered += tables.source.contains(word) ? 0 : 1;
  if (uncovered) spdlog::warn("{} lexicon source words are not in the {} tables", uncovered, src);
  manifest.set_note("uncovered_lexicon_sources", std::to_string(uncovered));

  std::vector<TranslationRanking> all_rankings;
  std::vector<EvalReport> reports;
  for (const auto method : config.induction.methods) {
    const auto run = rank_all(method, tables, sources, targets, {config.induction.lambda});
    if (!run.skipped.empty()) {
      spdlog::info("{}: {} source words without visual features", to_string(method), run.skipped.size());
    }
    if (method == RankingMethod::fused) {
      manifest.set_note("fused_fallback_pairs", std::to_string(run.fusion.fallback_pairs) + "/" +
                                                    std::to_string(run.fusion.pairs));
    }
    const std::size_t first = reports.size();
    for (auto& r : method_reports(run.rankings, lexicon, config.induction, target_vocab)) {
      r.method = to_string(method);
      reports.push_back(std::move(r));
    }
    all_rankings.insert(all_rankings.end(), run.rankings.begin(), run.rankings.end());
    if (reports.size() > first) {
      spdlog::info("{}: MRR {:.4f} over {} words", to_string(method), reports[first].mrr, reports[first].n);
    }
  }
  write_text(out / "rankings.tsv", format_rankings(all_rankings, config.induction.top_n), &manifest);
  write_text(out / "report.csv", format_report_csv(reports), &manifest);
  write_text(out / "report.json", format_report_json(reports), &manifest);
  manifest.add_timing("induce", timer.seconds());
  manifest.write();
  return reports;
}

std::vector<EvalReport> cmd_eval(const RunConfig& config, const fs::path& rankings_path, const fs::path& lexicon_path,
                                 const std::optional<fs::path>& target_vocabulary, const fs::path& out) {
  StageTimer timer;
  prepare_out(out, config);
  RunManifest manifest("eval", config_hash(config), config.seed, out);
  const auto rankings = parse_rankings(read_file(rankings_path), rankings_path.string());
  const auto lexicon = read_lexicon(lexicon_path);
  manifest.add_input(rankings_path);
  manifest.add_input(lexicon_path);
  std::set<std::string> vocab;
  if (target_vocabulary) {
    const auto v = read_vocabulary(*target_vocabulary, "target");
    for (int i = Vocabulary::kReservedCount; i < static_cast<int>(v.size()); ++i) vocab.insert(v.word(i));
    manifest.add_input(*target_vocabulary);
  }
  std::map<RankingMethod, std::vector<TranslationRanking>> by_method;
  for (const auto& r : rankings) by_method[r.method].push_back(r);
  if (by_method.empty()) throw EvaluationError(rankings_path.string() + " holds no rankings");
  std::vector<EvalReport> reports;
  for (const auto method : all_ranking_methods()) {
    const auto it = by_method.find(method);
    if (it == by_method.end()) continue;
    for (auto& r : method_reports(it->second, lexicon, config.induction, vocab)) {
      r.method = to_string(method);
      reports.push_back(std::move(r));
    }
  }
  write_text(out / "report.csv", format_report_csv(reports), &manifest);
  write_text(out / "report.json", format_report_json(reports), &manifest);
  manifest.add_timing("eval", timer.seconds());
  manifest.write();
  return reports;
}

std::vector<EvalReport> cmd_pipeline(const RunConfig& config, const fs::path& out, std::size_t threads) {
  StageTimer timer;
  prepare_out(out, config);
  RunManifest manifest("pipeline", config_hash(config), config.seed, out);
  StageTimer t;
  cmd_gen_corpus(config, out / "corpus");
  manifest.add_timing("gen-corpus", t.seconds());
  t = StageTimer();
  const auto trained = cmd_train(config, out / "corpus", out / "model");
  manifest.add_timing("train", t.seconds());
  t = StageTimer();
  cmd_extract(config, trained.checkpoint, out / "corpus", out / "features", threads);
  manifest.add_timing("extract", t.seconds());
  t = StageTimer();
  const auto reports =
      cmd_induce(config, out / "features", out / "corpus" / CorpusDescriptor::read(out / "corpus").lexicon,
                 out / "induction", threads);
  manifest.add_timing("induce", t.seconds());
  for (const auto* f : {"induction/report.csv", "induction/report.json", "induction/rankings.tsv", "model/model.lxpv"}) {
    manifest.add_output(out / f);
  }
  manifest.add_timing("total", timer.seconds());
  manifest.write();
  return reports;
}

int exit_code_for(const std::exception& e) noexcept {
  const auto* err = dynamic_cast<const Error*>(&e);
  if (!err) return 1;
  switch (err->kind()) {
    case ErrorKind::config:
    case ErrorKind::lookup:
    case ErrorKind::shape:
      return 2;
    case ErrorKind::io:
    case ErrorKind::format:
    case ErrorKind::input:
      return 3;
    case ErrorKind::numeric:
    case ErrorKind::evaluation:
    case ErrorKind::no_visual:
      return 4;
    default:
      return 1;
  }
}

void configure_logging() {
  auto logger = spdlog::get("lexipivot");
  if (!logger) logger = spdlog::stderr_color_st("lexipivot");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* env = std::getenv("LEXIPIVOT_LOG")) {
    const std::string v = env;
    if (v == "error") spdlog::set_level(spdlog::level::err);
    else if (v == "warn") spdlog::set_level(spdlog::level::warn);
    else if (v == "info") spdlog::set_level(spdlog::level::info);
    else if (v == "debug") spdlog::set_level(spdlog::level::debug);
    else spdlog::warn("ignoring LEXIPIVOT_LOG={} (expected error, warn, info or debug)", v);
  }
}

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::size_t threads = 1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--config", config, "JSON configuration file (defaults apply when omitted)");
    cmd->add_option("--seed", seed, "Root seed, overrides the config");
    cmd->add_option("--out", out, "Output directory");
    cmd->add_option("--threads", threads, "Worker threads for extraction")->check(CLI::PositiveNumber);
  }

  RunConfig resolve() const {
    RunConfig c = config.empty() ? parse_config(json::object()) : load_config(config);
    if (seed) c.seed = *seed;
    return c;
  }
};

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Bilingual lexicon induction through a multi-lingual caption model"};
  app.require_subcommand(1);
  Common common;

  auto* gen = app.add_subcommand("gen-corpus", "Generate a synthetic two-language corpus");
  common.attach(gen);

  auto* train_cmd = app.add_subcommand("train", "Train a mono- or multi-lingual caption model");
  common.attach(train_cmd);
  std::string corpus_dir, mono;
  bool multi = false;
  train_cmd->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  auto* mono_opt = train_cmd->add_option("--mono", mono, "Train one language only");
  train_cmd->add_flag("--multi", multi, "Train every corpus language jointly")->excludes(mono_opt);

  auto* extract = app.add_subcommand("extract", "Localize word occurrences and write feature tables");
  common.attach(extract);
  std::string checkpoint, method;
  extract->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  extract->add_option("--corpus", corpus_dir, "Corpus directory")->required();
  extract->add_option("--method", method, "probe or attention (overrides the config)");

  auto* induce = app.add_subcommand("induce", "Rank translations and evaluate them");
  common.attach(induce);
  std::string features_dir, lexicon, methods;
  induce->add_option("--features", features_dir, "Directory written by extract")->required();
  induce->add_option("--lexicon", lexicon, "Ground-truth lexicon TSV")->required();
  induce->add_option("--methods", methods, "Comma-separated methods (overrides the config)");

  auto* eval = app.add_subcommand("eval", "Score an existing rankings file");
  common.attach(eval);
  std::string rankings, vocab;
  eval->add_option("--rankings", rankings, "Rankings TSV")->required();
  eval->add_option("--lexicon", lexicon, "Ground-truth lexicon TSV")->required();
  eval->add_option("--target-vocab", vocab, "Target vocabulary; gold words in it but absent from a list count as misses");

  auto* pipeline = app.add_subcommand("pipeline", "gen-corpus, train, extract and induce in one go");
  common.attach(pipeline);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "lexipivot-error: usage: " << e.what() << "\n";
    return 2;
  }

  configure_logging();
  try {
    auto config = common.resolve();
    const fs::path out = common.out;
    if (*gen) {
      cmd_gen_corpus(config, out);
    } else if (*train_cmd) {
      TrainOptions opt;
      if (!mono.empty()) opt.mono = mono;
      cmd_train(config, corpus_dir, out, opt);
    } else if (*extract) {
      if (!method.empty()) config.extraction.method = localization_method_from_string(method);
      cmd_extract(config, checkpoint, corpus_dir, out, common.threads);
    } else if (*induce) {
      if (!methods.empty()) {
        config.induction.methods.clear();
        std::size_t pos = 0;
        while (pos <= methods.size()) {
          auto comma = methods.find(',', pos);
          if (comma == std::string::npos) comma = methods.size();
          config.induction.methods.push_back(ranking_method_from_string(methods.substr(pos, comma - pos)));
          pos = comma + 1;
        }
      }
      cmd_induce(config, features_dir, lexicon, out, common.threads);
    } else if (*eval) {
      cmd_eval(config, rankings, lexicon, vocab.empty() ? std::nullopt : std::optional<fs::path>(vocab), out);
    } else if (*pipeline) {
      cmd_pipeline(config, out, common.threads);
    }
  } catch (const std::exception& e) {
    const auto* err = dynamic_cast<const Error*>(&e);
    std::cerr << "lexipivot-error: " << (err ? std::string(to_string(err->kind())) : std::string("internal")) << ": "
              << e.what() << "\n";
    return exit_code_for(e);
  }
  return 0;
}

}  // namespace lexipivot::cli
