#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lexipivot/cli/commands.hpp"
#include "lexipivot/error.hpp"
#include "lexipivot/localization/word_features.hpp"
#include "lexipivot/model/checkpoint.hpp"
#include "temp_dir.hpp"

using namespace lexipivot;
using namespace lexipivot::cli;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

int run_args(std::vector<std::string> args) {
  args.insert(args.begin(), "lexipivot");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

// Small enough that a whole pipeline takes a fraction of a second.
nlohmann::json tiny_doc() {
  return {
      {"seed", 5},
      {"corpus", {{"concepts", 6}, {"attributes", 2}, {"verbs", 2}, {"grid_side", 2}, {"feature_dim", 8},
                  {"images_per_language", 40}, {"captions_per_image", 2}, {"min_count", 1}}},
      {"model", {{"embed_dim", 12}, {"hidden_dim", 12}, {"attention_dim", 6}}},
      {"training", {{"batch_size", 16}, {"learning_rate", 0.01}, {"max_epochs", 2}, {"patience", 2}}},
  };
}

RunConfig tiny_config() { return parse_config(tiny_doc()); }

}  // namespace

TEST_CASE("config parsing") {
  const RunConfig defaults = parse_config(nlohmann::json::object());
  CHECK(defaults.seed == 17);
  CHECK(defaults.training.learning_rate == doctest::Approx(1e-4));
  CHECK(defaults.induction.lambda == doctest::Approx(0.5));
  CHECK(defaults.extraction.method == LocalizationMethod::probe);

  // full resolved config survives a round trip
  const RunConfig tiny = tiny_config();
  const RunConfig again = parse_config(nlohmann::json::parse(to_json(tiny).dump()));
  CHECK(to_json(again).dump() == to_json(tiny).dump());
  CHECK(config_hash(again) == config_hash(tiny));
  CHECK(config_hash(tiny) != config_hash(defaults));
  CHECK(stage_seed(tiny, "init") != stage_seed(tiny, "shuffle"));

  auto typo = tiny_doc();
  typo["training"]["learnig_rate"] = 0.1;
  try {
    parse_config(typo);
    FAIL("accepted unknown key");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("training.learnig_rate") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config({{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(parse_config({{"induction", {{"lambda", 1.5}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config({{"induction", {{"methods", {"nope"}}}}}), ConfigError);
  CHECK_THROWS_AS(parse_config({{"model", {{"embed_dim", 8}, {"hidden_dim", 16}}}}), ConfigError);

  auto capped = tiny_doc();
  capped["extraction"] = {{"method", "attention"}, {"cap", 3}};
  const RunConfig c = parse_config(capped);
  CHECK(c.extraction.method == LocalizationMethod::attention);
  CHECK(c.extraction.cap == 3);
}

TEST_CASE("exit codes") {
  CHECK(exit_code_for(ConfigError("x")) == 2);
  CHECK(exit_code_for(LookupError("x")) == 2);
  CHECK(exit_code_for(IoError("x")) == 3);
  CHECK(exit_code_for(FormatError("x")) == 3);
  CHECK(exit_code_for(NumericError("x")) == 4);
  CHECK(exit_code_for(EvaluationError("x")) == 4);
  CHECK(exit_code_for(std::runtime_error("x")) == 1);

  TempDir tmp;
  auto typo = tiny_doc();
  typo["training"]["learnig_rate"] = 0.1;
  spit(tmp.path() / "bad.json", typo.dump());
  CHECK(run_args({"gen-corpus", "--config", (tmp.path() / "bad.json").string(), "--out",
                  (tmp.path() / "c").string()}) == 2);
  CHECK(run_args({"train", "--corpus", (tmp.path() / "missing").string(), "--out", (tmp.path() / "m").string()}) ==
        3);
  CHECK(run_args({"frobnicate"}) == 2);
}

TEST_CASE("stage outputs") {
  TempDir tmp;
  const RunConfig config = tiny_config();
  const auto corpus = tmp.path() / "corpus";
  cmd_gen_corpus(config, corpus);

  SUBCASE("gen-corpus is deterministic and loadable") {
    const auto other = tmp.path() / "corpus2";
    cmd_gen_corpus(config, other);
    for (const char* f : {"features.lxpf", "captions.src.tsv", "captions.tgt.tsv", "vocab.src.tsv", "lexicon.tsv",
                          "corpus.json", "config.json"})
      CHECK_MESSAGE(slurp(corpus / f) == slurp(other / f), f);

    const LoadedCorpus loaded = load_corpus(corpus, config.model.max_len);
    CHECK(loaded.regions() == 4);
    CHECK(loaded.feature_dim() == 8);
    CHECK(loaded.examples.at("src").size() == 80);
    CHECK(loaded.examples.at("tgt").size() == 80);

    const auto manifest = nlohmann::json::parse(slurp(corpus / "manifest.json"));
    CHECK(manifest.at("command") == "gen-corpus");
    CHECK(manifest.at("config_hash") == config_hash(config));
  }

  SUBCASE("mono training keeps one language") {
    const auto out = tmp.path() / "mono";
    const TrainOutcome mono = cmd_train(config, corpus, out, TrainOptions{"tgt"});
    const LoadedCheckpoint ck = load_checkpoint(mono.checkpoint);
    REQUIRE(ck.model.languages().size() == 1);
    CHECK(ck.model.languages()[0].id == "tgt");
    for (const auto& row : mono.log.rows) CHECK(row.language == "tgt");
    CHECK(fs::exists(out / "training_log.csv"));
    CHECK_THROWS_AS(cmd_train(config, corpus, tmp.path() / "bad", TrainOptions{"zz"}), LookupError);

    // same as training a one-language model directly with the stage seeds
    const LoadedCorpus loaded = load_corpus(corpus, config.model.max_len);
    ModelConfig mc = config.model;
    mc.dims.input_dim = loaded.feature_dim();
    mc.dims.regions = loaded.regions();
    MultiLingualModel direct(mc, {{"tgt", loaded.vocabularies.at("tgt").size()}}, stage_seed(config, "init"));
    TrainingConfig tc = config.training;
    tc.seed = stage_seed(config, "shuffle");
    const std::vector<LanguageSplit> splits{split_examples("tgt", loaded.examples.at("tgt"), config.val_fraction)};
    const TrainingLog log = train(direct, splits, tc);
    REQUIRE(log.rows.size() == mono.log.rows.size());
    for (std::size_t i = 0; i < log.rows.size(); ++i) {
      CHECK(log.rows[i].train_loss == mono.log.rows[i].train_loss);
      CHECK(log.rows[i].val_loss == mono.log.rows[i].val_loss);
    }
    const auto a = direct.params().get(MultiLingualModel::embedding_name("tgt")).data();
    const auto b = ck.model.params().get(MultiLingualModel::embedding_name("tgt")).data();
    CHECK(std::equal(a.begin(), a.end(), b.begin(), b.end()));
  }

  SUBCASE("extract, induce and eval") {
    const auto model_dir = tmp.path() / "model";
    const TrainOutcome trained = cmd_train(config, corpus, model_dir);
    const auto features = tmp.path() / "features";
    cmd_extract(config, trained.checkpoint, corpus, features, 2);

    const LoadedCorpus loaded = load_corpus(corpus, config.model.max_len);
    for (const std::string lang : {"src", "tgt"}) {
      const WordFeatureSet set = read_word_features(features / (lang + ".probe.lxwf"));
      std::size_t tokens = 0;
      for (const auto& ex : loaded.examples.at(lang))
        for (auto id : ex.tokens) tokens += Vocabulary::is_reserved(id) ? 0 : 1;
      CHECK(set.occurrence_count() == tokens);
      CHECK(set.dim == 12);
      const WordFeatureSet global = read_word_features(features / (lang + ".global.lxwf"));
      CHECK(global.occurrence_count() == tokens);
    }

    // re-extraction with a different thread count is byte-identical
    const auto features2 = tmp.path() / "features2";
    cmd_extract(config, trained.checkpoint, corpus, features2, 1);
    for (const char* f : {"src.probe.lxwf", "tgt.probe.lxwf", "src.global.lxwf", "tgt.linguistic.lxwf"})
      CHECK_MESSAGE(slurp(features / f) == slurp(features2 / f), f);

    // attention extraction covers the same words
    RunConfig by_attention = config;
    by_attention.extraction.method = LocalizationMethod::attention;
    const auto features_att = tmp.path() / "features_att";
    cmd_extract(by_attention, trained.checkpoint, corpus, features_att);
    for (const std::string lang : {"src", "tgt"}) {
      const auto probe = read_word_features(features / (lang + ".probe.lxwf"));
      const auto att = read_word_features(features_att / (lang + ".attention.lxwf"));
      CHECK(slurp(features / (lang + ".probe.lxwf")) != slurp(features_att / (lang + ".attention.lxwf")));
      REQUIRE(probe.words.size() == att.words.size());
      for (auto p = probe.words.begin(), a = att.words.begin(); p != probe.words.end(); ++p, ++a) {
        CHECK(p->first == a->first);
        CHECK(p->second.size() == a->second.size());
      }
    }

    RunConfig fused_only = config;
    fused_only.induction.methods = {RankingMethod::fused};
    const auto induced = tmp.path() / "induced";
    const auto reports = cmd_induce(fused_only, features, corpus / "lexicon.tsv", induced);
    REQUIRE(!reports.empty());
    CHECK(reports[0].method == "fused");
    CHECK(reports[0].pos == "all");
    CHECK(reports[1].pos == "NOUN+ADJ");
    CHECK(reports[0].n == read_lexicon(corpus / "lexicon.tsv").entries.size() - reports[0].skipped);
    for (const auto& r : reports) CHECK(r.method == "fused");

    cmd_induce(fused_only, features, corpus / "lexicon.tsv", tmp.path() / "induced2", 3);
    for (const char* f : {"report.csv", "report.json", "rankings.tsv"})
      CHECK_MESSAGE(slurp(induced / f) == slurp(tmp.path() / "induced2" / f), f);

    const std::string csv = slurp(induced / "report.csv");
    CHECK(csv.rfind("method,pos,n,mrr,p1,p5,p10,p20\n", 0) == 0);
    std::size_t lines = 0;
    for (char ch : csv) lines += ch == '\n';
    CHECK(lines == reports.size() + 1);

    // eval on the written rankings reproduces the aggregate row
    const auto evaluated = cmd_eval(fused_only, induced / "rankings.tsv", corpus / "lexicon.tsv",
                                    corpus / "vocab.tgt.tsv", tmp.path() / "eval");
    REQUIRE(!evaluated.empty());
    CHECK(evaluated[0].mrr == doctest::Approx(reports[0].mrr).epsilon(1e-5));
    CHECK(evaluated[0].precision.at(1) == doctest::Approx(reports[0].precision.at(1)));
  }
}

TEST_CASE("pipeline is reproducible") {
  TempDir tmp;
  auto doc = tiny_doc();
  spit(tmp.path() / "tiny.json", doc.dump());
  const auto a = tmp.path() / "a";
  const auto b = tmp.path() / "b";
  REQUIRE(run_args({"pipeline", "--config", (tmp.path() / "tiny.json").string(), "--out", a.string()}) == 0);
  REQUIRE(run_args({"pipeline", "--config", (tmp.path() / "tiny.json").string(), "--out", b.string(), "--threads",
                    "3"}) == 0);
  for (const char* f : {"induction/report.csv", "induction/report.json", "induction/rankings.tsv", "model/model.lxpv",
                        "model/model.lxpv.json", "features/src.probe.lxwf"})
    CHECK_MESSAGE(slurp(a / f) == slurp(b / f), f);
  CHECK(!slurp(a / "induction/report.csv").empty());
}
