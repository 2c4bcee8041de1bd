#include <chrono>
#include <cmath>
#include <random>
#include <algorithm>

#include "doctest.h"
#include "lexipivot/error.hpp"
#include "lexipivot/model/bleu.hpp"
#include "lexipivot/model/checkpoint.hpp"
#include "lexipivot/model/generation.hpp"
#include "lexipivot/model/training.hpp"
#include "lexipivot/numerics/adam.hpp"
#include "lexipivot/numerics/grad_check.hpp"
#include "model_fixtures.hpp"
#include "temp_dir.hpp"

using namespace lexipivot;
using fixtures::random_caption;
using fixtures::random_image;
using fixtures::tiny_config;

namespace {

const std::vector<LanguageSpec> kTwoLanguages = {{"en", 12}, {"de", 12}};

struct Batch {
  std::vector<SpatialImage> images;
  std::vector<TrainingExample> examples;
};

Batch mixed_batch(std::size_t n, std::size_t input_dim, std::size_t k, std::uint64_t seed, std::size_t max_words = 4) {
  std::mt19937_64 rng(seed);
  Batch b;
  b.images.reserve(n);
  for (std::size_t i = 0; i < n; ++i) b.images.push_back(random_image(i, k, input_dim, rng));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t words = 1 + i % max_words;  // ragged lengths exercise masking
    b.examples.push_back({i % 2 ? "de" : "en", &b.images[i], random_caption(words, 12, rng)});
  }
  return b;
}

void perturb(ParamStore& params, double scale, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-scale, scale);
  for (auto& [_, t] : params) {
    for (double& v : t.data()) v += d(rng);
  }
}

// Reference loss built from single decode steps: independent of the batched unroll.
double stepwise_nll(const MultiLingualModel& m, const TrainingExample& ex) {
  const auto regions = m.encode(*ex.image);
  auto state = m.initial_state();
  double nll = 0;
  for (std::size_t t = 0; t + 1 < ex.tokens.size(); ++t) {
    const auto step = m.decode_step(ex.language, state, ex.tokens[t], regions);
    state = step.state;
    const double mx = step.logits.maxCoeff();
    const double lse = mx + std::log((step.logits.array() - mx).exp().sum());
    nll += lse - step.logits[ex.tokens[t + 1]];
  }
  return nll;
}

}  // namespace

TEST_CASE("full model gradient check") {
  for (auto mode : {ContextMode::attention, ContextMode::mean_pool}) {
    auto config = tiny_config();
    config.context = mode;
    MultiLingualModel m(config, kTwoLanguages, 5);
    perturb(m.params(), 0.3, 6);
    // T = 5 predicted tokens for the longest caption.
    auto batch = mixed_batch(6, 6, 4, 7, 4);
    auto closure = [&](ParamStore&) { return sequence_loss_backward(m, batch.examples).mean(); };
    const auto start = std::chrono::steady_clock::now();
    const auto report = grad_check(closure, m.params());
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    INFO("mode " << to_string(mode) << " max rel err " << report.max_rel_error);
    for (const auto& e : report.entries) INFO(e.name << ": " << e.max_rel_error);
    CHECK(report.passed);
    CHECK(report.max_rel_error < 1e-4);
    CHECK(seconds < 60.0);
  }
}

TEST_CASE("batched loss matches step-by-step decoding") {
  MultiLingualModel m(tiny_config(), kTwoLanguages, 11);
  perturb(m.params(), 0.2, 12);
  auto batch = mixed_batch(7, 6, 4, 13);
  const auto r = sequence_loss(m, batch.examples);
  double ref = 0;
  std::size_t tokens = 0;
  for (const auto& ex : batch.examples) {
    ref += stepwise_nll(m, ex);
    tokens += ex.tokens.size() - 1;
  }
  CHECK(r.token_count == tokens);
  CHECK(r.nll_sum == doctest::Approx(ref).epsilon(1e-12));
}

TEST_CASE("sequence loss properties") {
  SUBCASE("uniform output gives ln N per token") {
    MultiLingualModel m(tiny_config(), {{"en", 10}}, 1);
    for (auto& [_, t] : m.params()) {
      for (double& v : t.data()) v = 0.0;
    }
    std::mt19937_64 rng(2);
    auto img = random_image(0, 4, 6, rng);
    std::vector<TrainingExample> batch{{"en", &img, random_caption(3, 10, rng)}};
    CHECK(sequence_loss(m, batch).mean() == doctest::Approx(std::log(10.0)).epsilon(1e-12));
  }
  SUBCASE("duplicating the batch leaves the mean unchanged") {
    MultiLingualModel m(tiny_config(), kTwoLanguages, 3);
    auto batch = mixed_batch(5, 6, 4, 4);
    auto doubled = batch.examples;
    doubled.insert(doubled.end(), batch.examples.begin(), batch.examples.end());
    CHECK(std::abs(sequence_loss(m, batch.examples).mean() - sequence_loss(m, doubled).mean()) < 1e-12);
  }
  SUBCASE("too long for the unroll") {
    MultiLingualModel m(tiny_config(), kTwoLanguages, 3);
    std::mt19937_64 rng(1);
    auto img = random_image(0, 4, 6, rng);
    std::vector<TrainingExample> batch{{"en", &img, random_caption(7, 12, rng)}};
    CHECK_THROWS_AS(sequence_loss(m, batch), InputError);
  }
  SUBCASE("fifty Adam steps halve the loss on a fixed batch") {
    MultiLingualModel m(tiny_config(), kTwoLanguages, 8);
    auto batch = mixed_batch(4, 6, 4, 9);
    AdamState adam;
    adam.learning_rate = 3e-2;
    const double before = sequence_loss(m, batch.examples).mean();
    for (int i = 0; i < 50; ++i) {
      m.params().zero_grad();
      sequence_loss_backward(m, batch.examples);
      clip_grad_norm(m.params(), 5.0);
      adam_update(m.params(), adam);
    }
    CHECK(sequence_loss(m, batch.examples).mean() <= 0.5 * before);
  }
}

TEST_CASE("encoder and attention") {
  std::mt19937_64 rng(21);
  SUBCASE("identity encoder gives tanh of the input") {
    auto config = tiny_config(8);
    MultiLingualModel m(config, kTwoLanguages, 1);
    auto& w = m.params().get(param_names::kEncoderWeight);
    w.as_matrix().setIdentity();
    auto img = random_image(0, 4, 8, rng);
    const auto a = m.encode(img);
    for (std::size_t k = 0; k < 4; ++k) {
      for (std::size_t j = 0; j < 8; ++j) {
        CHECK(a.regions(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) ==
              doctest::Approx(std::tanh(double(img.data[k * 8 + j]))).epsilon(1e-15));
      }
    }
  }
  SUBCASE("shape mismatch") {
    MultiLingualModel m(tiny_config(), kTwoLanguages, 1);
    auto img = random_image(0, 3, 6, rng);
    CHECK_THROWS_AS(m.encode(img), ShapeError);
    CHECK_THROWS_AS(m.attend(Vector::Zero(8), EncodedImage{Matrix(8, 0)}), ShapeError);
  }
  SUBCASE("zero scoring weights give uniform attention") {
    MultiLingualModel m(tiny_config(), kTwoLanguages, 1);
    m.params().get(param_names::kAttentionScore).as_vector().setZero();
    const auto a = m.encode(random_image(0, 4, 6, rng));
    const auto r = m.attend(Vector::Random(8), a);
    for (int k = 0; k < 4; ++k) CHECK(r.weights[k] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK((r.context - a.mean()).norm() < 1e-15);
  }
  SUBCASE("a single region takes all the weight") {
    MultiLingualModel m(tiny_config(6, 1), kTwoLanguages, 1);
    const auto a = m.encode(random_image(0, 1, 6, rng));
    const auto r = m.attend(Vector::Random(8), a);
    CHECK(r.weights[0] == 1.0);
    CHECK(r.context == a.regions.col(0));
  }
  SUBCASE("weights sum to one on random decode steps") {
    MultiLingualModel m(tiny_config(), kTwoLanguages, 2);
    perturb(m.params(), 2.0, 3);
    double worst = 0;
    for (int i = 0; i < 200; ++i) {
      const auto a = m.encode(random_image(i, 4, 6, rng));
      const auto r = m.attend(Vector::Random(8) * 3.0, a);
      worst = std::max(worst, std::abs(r.weights.sum() - 1.0));
    }
    CHECK(worst < 1e-9);
  }
  SUBCASE("two languages see the same encoding") {
    MultiLingualModel m(tiny_config(), kTwoLanguages, 2);
    const auto img = random_image(0, 4, 6, rng);
    const auto a = m.encode(img);
    const auto s_en = m.decode_step("en", m.initial_state(), Vocabulary::kBegin, a);
    const auto s_de = m.decode_step("de", m.initial_state(), Vocabulary::kBegin, a);
    CHECK(s_en.attention.weights == s_de.attention.weights);
  }
}

TEST_CASE("decode step") {
  MultiLingualModel m(tiny_config(), {{"en", 12}, {"de", 7}}, 4);
  std::mt19937_64 rng(5);
  const auto a = m.encode(random_image(0, 4, 6, rng));
  const auto s0 = m.initial_state();
  const auto r1 = m.decode_step("en", s0, Vocabulary::kBegin, a);
  const auto r2 = m.decode_step("en", s0, Vocabulary::kBegin, a);
  CHECK(r1.logits == r2.logits);
  CHECK(r1.logits.size() == 12);
  CHECK(m.decode_step("de", s0, Vocabulary::kBegin, a).logits.size() == 7);
  CHECK(r1.state.t == 1);
  CHECK(r1.state.emitted == TokenSeq{Vocabulary::kBegin});
  CHECK_THROWS_AS(m.decode_step("fr", s0, 1, a), LookupError);
  CHECK_THROWS_AS(m.decode_step("de", s0, 7, a), BoundsError);
}

TEST_CASE("parameter sharing and tying") {
  MultiLingualModel m(tiny_config(), kTwoLanguages, 4);
  const auto en = m.view("en"), de = m.view("de");
  CHECK(en.encoder_weight == de.encoder_weight);
  CHECK(en.lstm_input_weight == de.lstm_input_weight);
  CHECK(en.attention_score_weight == de.attention_score_weight);
  CHECK(en.embedding != de.embedding);
  CHECK(en.output_projection == en.embedding);
  CHECK(en.embedding->shape() == Shape{8, 12});

  // Updating via one language's batch moves what the other language sees.
  auto batch = mixed_batch(2, 6, 4, 3);
  std::vector<TrainingExample> en_only{batch.examples[0]};
  const std::string active[] = {"en"};
  m.set_trainable(active);
  const double before = m.view("de").lstm_hidden_weight->data()[0];
  const auto de_embedding = m.params().get("embedding.de").data()[0];
  m.params().zero_grad();
  sequence_loss_backward(m, en_only);
  AdamState adam;
  adam.learning_rate = 1e-2;
  adam_update(m.params(), adam);
  CHECK(m.view("de").lstm_hidden_weight->data()[0] != before);
  CHECK(m.params().get("embedding.de").data()[0] == de_embedding);

  MultiLingualModel fresh(tiny_config(), kTwoLanguages, 4), mono(tiny_config(), {{"de", 12}}, 4);
  for (const auto* name : {"embedding.de", param_names::kLstmInputWeight, param_names::kEncoderWeight}) {
    CHECK(std::ranges::equal(mono.params().get(name).data(), fresh.params().get(name).data()));
  }

  CHECK(mean_pool_variant(tiny_config(), kTwoLanguages, 4).params().scalar_count() < m.params().scalar_count());
  CHECK_THROWS_AS(MultiLingualModel(tiny_config(), {}, 1), ConfigError);
  auto bad = tiny_config();
  bad.dims.hidden_dim = 6;
  CHECK_THROWS_AS(MultiLingualModel(bad, kTwoLanguages, 1), ConfigError);
}

TEST_CASE("mean pooling attends uniformly") {
  auto m = mean_pool_variant(tiny_config(), kTwoLanguages, 4);
  std::mt19937_64 rng(5);
  const auto a = m.encode(random_image(0, 4, 6, rng));
  const auto r = m.attend(Vector::Random(8), a);
  for (int k = 0; k < 4; ++k) CHECK(r.weights[k] == 0.25);
  CHECK_FALSE(m.params().contains(param_names::kAttentionScore));
}

TEST_CASE("teacher-forced trace") {
  MultiLingualModel m(tiny_config(), kTwoLanguages, 4);
  perturb(m.params(), 0.3, 6);
  std::mt19937_64 rng(7);
  std::vector<EncodedImage> regions{m.encode(random_image(0, 4, 6, rng)), m.encode(random_image(1, 4, 6, rng))};
  std::vector<TokenSeq> tokens{random_caption(3, 12, rng), random_caption(1, 12, rng)};
  const auto trace = trace_teacher_forced(m, "en", regions, tokens);
  REQUIRE(trace.gold_probability.size() == 2);
  CHECK(trace.gold_probability[1].size() == 2);
  for (std::size_t b = 0; b < 2; ++b) {
    auto state = m.initial_state();
    for (std::size_t t = 0; t + 1 < tokens[b].size(); ++t) {
      const auto s = m.decode_step("en", state, tokens[b][t], regions[b]);
      state = s.state;
      const Vector p = (s.logits.array() - s.logits.maxCoeff()).exp().matrix();
      CHECK(trace.gold_probability[b][t] == doctest::Approx(p[tokens[b][t + 1]] / p.sum()).epsilon(1e-12));
      CHECK((trace.attention[b][t] - s.attention.weights).norm() < 1e-12);
    }
  }
}

TEST_CASE("interleave schedule") {
  const std::size_t two_to_one[] = {2, 1};
  CHECK(interleave_schedule(two_to_one) == std::vector<std::size_t>{0, 0, 1});
  const std::size_t sizes[] = {7, 4};  // 200 and 100 examples at batch 32
  const auto s = interleave_schedule(sizes);
  CHECK(std::count(s.begin(), s.end(), 0u) == 7);
  CHECK(std::count(s.begin(), s.end(), 1u) == 4);
  const std::size_t single[] = {3};
  CHECK(interleave_schedule(single) == std::vector<std::size_t>{0, 0, 0});
}

TEST_CASE("training") {
  auto batch = mixed_batch(24, 6, 4, 31);
  std::vector<TrainingExample> en, de;
  for (const auto& ex : batch.examples) (ex.language == "en" ? en : de).push_back(ex);
  TrainingConfig cfg;
  cfg.batch_size = 4;
  cfg.learning_rate = 1e-2;
  cfg.max_epochs = 6;
  cfg.seed = 99;
  std::vector<LanguageSplit> splits{split_examples("en", en, 0.25), split_examples("de", de, 0.25)};
  CHECK(splits[0].val.size() == 3);
  for (const auto& v : splits[0].val) {
    for (const auto& t : splits[0].train) CHECK(v.image->image_id > t.image->image_id);
  }

  SUBCASE("deterministic and restores the best epoch") {
    MultiLingualModel a(tiny_config(), kTwoLanguages, 1), b(tiny_config(), kTwoLanguages, 1);
    const auto la = train(a, splits, cfg);
    const auto lb = train(b, splits, cfg);
    CHECK(a.params().checksum() == b.params().checksum());
    REQUIRE(la.rows.size() == lb.rows.size());
    for (std::size_t i = 0; i < la.rows.size(); ++i) CHECK(la.rows[i].val_loss == lb.rows[i].val_loss);
    CHECK(la.rows.size() == 2 * la.epochs_run);
    LossResult val;
    for (const auto& s : splits) {
      const auto r = evaluate_loss(a, s.val);
      val.nll_sum += r.nll_sum;
      val.token_count += r.token_count;
    }
    CHECK(val.mean() == doctest::Approx(la.best_val_loss).epsilon(1e-12));
  }
  SUBCASE("single language reduces to mono-lingual training") {
    MultiLingualModel mono(tiny_config(), {{"en", 12}}, 1);
    const auto log = train(mono, std::span(splits).first(1), cfg);
    CHECK(log.rows.front().language == "en");
    CHECK(log.rows.size() == log.epochs_run);
  }
  SUBCASE("errors") {
    MultiLingualModel m(tiny_config(), kTwoLanguages, 1);
    std::vector<LanguageSplit> empty{{"en", {}, {}}};
    CHECK_THROWS_AS(train(m, empty, cfg), ConfigError);
    m.params().get(param_names::kLstmBias).data()[0] = NAN;
    try {
      train(m, splits, cfg);
      FAIL("expected a numeric error");
    } catch (const NumericError& e) {
      CHECK(std::string(e.what()).find("epoch 1") != std::string::npos);
    }
  }
}

TEST_CASE("caption generation") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    MultiLingualModel m(tiny_config(), kTwoLanguages, 100 + trial);
    perturb(m.params(), 1.0, trial);
    const auto img = random_image(trial, 4, 6, rng);
    const auto g = generate_caption(m, "en", img);
    GenerationOptions beam1{DecodeMode::beam, 1};
    CHECK(generate_caption(m, "en", img, beam1) == g);
    CHECK(g.size() <= m.config().max_len);
    CHECK(g.front() == Vocabulary::kBegin);
    GenerationOptions beam4{DecodeMode::beam, 4, 5};
    const auto b = generate_caption(m, "en", img, beam4);
    CHECK(b.size() <= 5);
    for (std::size_t i = 1; i < b.size(); ++i) CHECK(b[i] != Vocabulary::kPad);
  }
}

TEST_CASE("bleu4") {
  const std::vector<Sentence> cand{{"a", "b", "c", "d", "e"}};
  SUBCASE("perfect match") {
    std::vector<std::vector<Sentence>> refs{{cand[0]}};
    CHECK(bleu4(cand, refs) == doctest::Approx(100.0).epsilon(1e-12));
  }
  SUBCASE("no shared unigram") {
    std::vector<std::vector<Sentence>> refs{{{"v", "w", "x", "y", "z"}}};
    CHECK(bleu4(cand, refs) == 0.0);
  }
  SUBCASE("two sentence fixture") {
    // s1: "a b c d e" vs "a b c d f" -> matches 4/5, 3/4, 2/3, 1/2.
    // s2: "x y z w" vs "x y z w v v" -> 4/4, 3/3, 2/2, 1/1.
    // Corpus: 8/9, 6/7, 4/5, 2/3; lengths 9 vs 11.
    const std::vector<Sentence> c{{"a", "b", "c", "d", "e"}, {"x", "y", "z", "w"}};
    const std::vector<std::vector<Sentence>> r{{{"a", "b", "c", "d", "f"}}, {{"x", "y", "z", "w", "v", "v"}}};
    const double expected = 100.0 * std::exp(1.0 - 11.0 / 9.0) * std::pow(8.0 / 9 * 6.0 / 7 * 4.0 / 5 * 2.0 / 3, 0.25);
    CHECK(bleu4(c, r) == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("clipping and closest reference") {
    // Unigram "the" clipped to 2 by the second reference; closest length is 3.
    const std::vector<Sentence> c{{"the", "the", "the"}};
    const std::vector<std::vector<Sentence>> r{{{"the", "cat"}, {"the", "the", "dog"}}};
    CHECK(bleu4(c, r) == 0.0);  // no 4-gram possible
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(bleu4({}, {}), InputError);
    std::vector<std::vector<Sentence>> none{{}};
    CHECK_THROWS_AS(bleu4(cand, none), InputError);
  }
}

TEST_CASE("checkpoint round trip") {
  TempDir dir;
  MultiLingualModel m(tiny_config(), kTwoLanguages, 5);
  perturb(m.params(), 0.1, 1);
  const auto path = dir.path() / "model.lxpv";
  save_checkpoint(path, m, CheckpointInfo{17, {{"en", "vocab.en.tsv"}}});
  const auto loaded = load_checkpoint(path);
  CHECK(loaded.model.params().checksum() == m.params().checksum());
  CHECK(loaded.info.seed == 17);
  CHECK(loaded.info.vocabulary_files.at("en") == "vocab.en.tsv");
  CHECK(loaded.model.languages()[1].id == "de");
  CHECK(loaded.model.config().dims.attention_dim == 8);

  auto other = tiny_config();
  other.dims.attention_dim = 4;
  CHECK_THROWS_AS(MultiLingualModel::from_params(other, kTwoLanguages, m.params()), ConfigError);
}
