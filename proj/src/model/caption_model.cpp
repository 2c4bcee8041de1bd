#include "lexipivot/model/caption_model.hpp"

#include <cmath>

#include "kernels.hpp"
#include "lexipivot/error.hpp"
#include "lexipivot/numerics/ops.hpp"
#include "lexipivot/random.hpp"

namespace lexipivot {

namespace pn = param_names;

void ModelConfig::validate() const {
  const auto& d = dims;
  if (d.input_dim == 0 || d.embed_dim == 0 || d.hidden_dim == 0 || d.regions == 0) {
    throw ConfigError("model dimensions must be positive");
  }
  if (context == ContextMode::attention && d.attention_dim == 0) {
    throw ConfigError("attention_dim must be positive");
  }
  if (d.hidden_dim != d.embed_dim) {
    throw ConfigError("hidden_dim (" + std::to_string(d.hidden_dim) + ") must equal embed_dim (" +
                      std::to_string(d.embed_dim) + ") because logits use the embedding matrix");
  }
  if (max_len < 2) throw ConfigError("max_len must allow both sentinels");
}

MultiLingualModel::MultiLingualModel(ModelConfig config, std::vector<LanguageSpec> languages,
                                     std::uint64_t seed)
    : config_(std::move(config)), languages_(std::move(languages)), params_(seed) {
  config_.validate();
  if (languages_.empty()) throw ConfigError("model needs at least one language");
  const auto& d = config_.dims;
  const std::size_t D = d.embed_dim, H = d.hidden_dim, A = d.attention_dim, I = d.input_dim;
  // Shared weights and each embedding draw from their own streams, so a
  // language's initial embedding does not depend on which others are present.
  Rng rng(derive_seed(seed, "shared"));
  auto matrix = [&](const char* name, std::size_t rows, std::size_t cols, std::size_t fan_in) {
    Tensor t({rows, cols}, true);
    init_uniform(t, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
    params_.add(name, std::move(t));
  };
  auto zeros = [&](const std::string& name, std::size_t n) { params_.add(name, Tensor({n}, true)); };

  matrix(pn::kEncoderWeight, D, I, I);
  zeros(pn::kEncoderBias, D);
  matrix(pn::kLstmInputWeight, 4 * H, 2 * D, 2 * D);
  matrix(pn::kLstmHiddenWeight, 4 * H, H, H);
  zeros(pn::kLstmBias, 4 * H);
  auto& bias = params_.get(pn::kLstmBias);
  for (std::size_t r = 0; r < H; ++r) bias[H + r] = 1.0;
  if (config_.context == ContextMode::attention) {
    matrix(pn::kAttentionHidden, A, H, H);
    matrix(pn::kAttentionRegion, A, D, D);
    zeros(pn::kAttentionBias, A);
    Tensor score({A}, true);
    init_uniform(score, 1.0 / std::sqrt(static_cast<double>(A)), rng);
    params_.add(pn::kAttentionScore, std::move(score));
  }
  for (const auto& lang : languages_) {
    if (lang.vocab_size == 0) throw ConfigError("language \"" + lang.id + "\" has an empty vocabulary");
    // Used as the output projection as well: fan-in is the hidden size.
    const auto name = embedding_name(lang.id);
    rng.seed(derive_seed(seed, name));
    matrix(name.c_str(), D, lang.vocab_size, H);
  }
  set_all_trainable();
}

MultiLingualModel MultiLingualModel::from_params(ModelConfig config,
                                                 std::vector<LanguageSpec> languages,
                                                 ParamStore params) {
  config.validate();
  MultiLingualModel m;
  m.config_ = std::move(config);
  m.languages_ = std::move(languages);
  m.params_ = std::move(params);
  m.check_layout();
  m.set_all_trainable();
  return m;
}

void MultiLingualModel::check_layout() const {
  const auto& d = config_.dims;
  const std::size_t D = d.embed_dim, H = d.hidden_dim, A = d.attention_dim, I = d.input_dim;
  std::vector<std::pair<std::string, Shape>> expected = {
      {pn::kEncoderWeight, {D, I}},        {pn::kEncoderBias, {D}},
      {pn::kLstmInputWeight, {4 * H, 2 * D}}, {pn::kLstmHiddenWeight, {4 * H, H}},
      {pn::kLstmBias, {4 * H}},
  };
  if (config_.context == ContextMode::attention) {
    expected.push_back({pn::kAttentionHidden, {A, H}});
    expected.push_back({pn::kAttentionRegion, {A, D}});
    expected.push_back({pn::kAttentionBias, {A}});
    expected.push_back({pn::kAttentionScore, {A}});
  }
  for (const auto& lang : languages_) expected.push_back({embedding_name(lang.id), {D, lang.vocab_size}});
  if (expected.size() != params_.size()) {
    throw ConfigError("checkpoint holds " + std::to_string(params_.size()) + " parameters, model expects " +
                      std::to_string(expected.size()));
  }
  for (const auto& [name, shape] : expected) {
    if (!params_.contains(name)) throw ConfigError("checkpoint lacks parameter \"" + name + "\"");
    const auto& got = params_.get(name).shape();
    if (got != shape) {
      throw ConfigError("parameter \"" + name + "\" is " + shape_to_string(got) + ", expected " +
                        shape_to_string(shape));
    }
  }
}

bool MultiLingualModel::has_language(const std::string& id) const noexcept {
  for (const auto& l : languages_) {
    if (l.id == id) return true;
  }
  return false;
}

const LanguageSpec& MultiLingualModel::spec(const std::string& id) const {
  for (const auto& l : languages_) {
    if (l.id == id) return l;
  }
  throw LookupError("language \"" + id + "\" is not registered with the model");
}

std::size_t MultiLingualModel::vocab_size(const std::string& id) const { return spec(id).vocab_size; }

LanguageView MultiLingualModel::view(const std::string& language) const {
  spec(language);
  LanguageView v;
  v.encoder_weight = &params_.get(pn::kEncoderWeight);
  v.encoder_bias = &params_.get(pn::kEncoderBias);
  v.embedding = &params_.get(embedding_name(language));
  v.output_projection = v.embedding;
  v.lstm_input_weight = &params_.get(pn::kLstmInputWeight);
  v.lstm_hidden_weight = &params_.get(pn::kLstmHiddenWeight);
  v.lstm_bias = &params_.get(pn::kLstmBias);
  if (config_.context == ContextMode::attention) {
    v.attention_hidden_weight = &params_.get(pn::kAttentionHidden);
    v.attention_region_weight = &params_.get(pn::kAttentionRegion);
    v.attention_bias = &params_.get(pn::kAttentionBias);
    v.attention_score_weight = &params_.get(pn::kAttentionScore);
  }
  return v;
}

void MultiLingualModel::set_trainable(std::span<const std::string> languages) {
  for (auto& [name, t] : params_) t.set_requires_grad(name.rfind("embedding.", 0) != 0);
  if (config_.freeze_encoder) {
    params_.get(pn::kEncoderWeight).set_requires_grad(false);
    params_.get(pn::kEncoderBias).set_requires_grad(false);
  }
  for (const auto& lang : languages) params_.get(embedding_name(spec(lang).id)).set_requires_grad(true);
}

void MultiLingualModel::set_all_trainable() {
  std::vector<std::string> ids;
  for (const auto& l : languages_) ids.push_back(l.id);
  set_trainable(ids);
}

EncodedImage MultiLingualModel::encode(const SpatialImage& image) const {
  const auto& d = config_.dims;
  if (image.regions != d.regions || image.dim != d.input_dim) {
    throw ShapeError("image " + std::to_string(image.image_id) + " is " + std::to_string(image.regions) +
                     "x" + std::to_string(image.dim) + ", model expects " + std::to_string(d.regions) +
                     "x" + std::to_string(d.input_dim));
  }
  Matrix inputs(static_cast<Eigen::Index>(d.input_dim), static_cast<Eigen::Index>(d.regions));
  for (std::size_t k = 0; k < image.regions; ++k) {
    for (std::size_t j = 0; j < image.dim; ++j) {
      inputs(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) = image.data[k * image.dim + j];
    }
  }
  return EncodedImage{detail::encode_columns(view(languages_.front().id), inputs)};
}

DecodeState MultiLingualModel::initial_state() const {
  const auto H = static_cast<Eigen::Index>(config_.dims.hidden_dim);
  return DecodeState{Vector::Zero(H), Vector::Zero(H), 0, {}};
}

AttentionResult MultiLingualModel::attend(const Vector& h_prev, const EncodedImage& regions) const {
  const auto K = regions.count();
  if (K == 0) throw ShapeError("attention over zero regions");
  if (regions.regions.rows() != static_cast<Eigen::Index>(config_.dims.embed_dim) ||
      h_prev.size() != static_cast<Eigen::Index>(config_.dims.hidden_dim)) {
    throw ShapeError("attend: regions " + std::to_string(regions.regions.rows()) + "x" +
                     std::to_string(K) + ", hidden " + std::to_string(h_prev.size()));
  }
  AttentionResult out;
  if (config_.context == ContextMode::mean_pool) {
    out.weights = Vector::Constant(K, 1.0 / static_cast<double>(K));
    out.context = regions.mean();
    return out;
  }
  const auto w = detail::attention_weights(view(languages_.front().id));
  const Matrix projected = w.region_weight * regions.regions;
  const Vector query = w.hidden_weight * h_prev + w.bias;
  Matrix activations(projected.rows(), K);
  out.weights.resize(K);
  detail::attention_forward(w, projected, query, activations, out.weights);
  out.context = regions.regions * out.weights;
  return out;
}

StepResult MultiLingualModel::decode_step(const std::string& language, const DecodeState& state,
                                          int prev_token, const EncodedImage& regions) const {
  const auto& lang = spec(language);
  if (prev_token < 0 || static_cast<std::size_t>(prev_token) >= lang.vocab_size) {
    throw BoundsError("token " + std::to_string(prev_token) + " outside vocabulary of " +
                      std::to_string(lang.vocab_size) + " for \"" + language + "\"");
  }
  const auto v = view(language);
  const auto D = static_cast<Eigen::Index>(config_.dims.embed_dim);
  StepResult out;
  out.attention = attend(state.h, regions);
  const auto embedding = v.embedding->as_matrix();
  Matrix x(2 * D, 1);
  x.topRows(D) = embedding.col(prev_token);
  x.bottomRows(D) = out.attention.context;
  LstmCache cache;
  lstm_forward(detail::lstm_weights(v), x, state.h, state.c, cache);
  out.logits = embedding.transpose() * cache.h.col(0);
  out.state.h = cache.h.col(0);
  out.state.c = cache.c.col(0);
  out.state.t = state.t + 1;
  out.state.emitted = state.emitted;
  out.state.emitted.push_back(prev_token);
  return out;
}

MultiLingualModel mean_pool_variant(ModelConfig config, std::vector<LanguageSpec> languages,
                                    std::uint64_t seed) {
  config.context = ContextMode::mean_pool;
  return MultiLingualModel(std::move(config), std::move(languages), seed);
}

namespace detail {

AttentionWeights attention_weights(const LanguageView& v) {
  if (!v.attention_hidden_weight) throw StateError("model has no attention network");
  return AttentionWeights{v.attention_hidden_weight->as_matrix(), v.attention_region_weight->as_matrix(),
                          v.attention_bias->as_vector(), v.attention_score_weight->as_vector()};
}

LstmWeightsView lstm_weights(const LanguageView& v) {
  return LstmWeightsView{v.lstm_input_weight->as_matrix(), v.lstm_hidden_weight->as_matrix(),
                         v.lstm_bias->as_vector()};
}

void attention_forward(const AttentionWeights& w, const Eigen::Ref<const Matrix>& projected,
                       const Eigen::Ref<const Vector>& query, Eigen::Ref<Matrix> activations,
                       Eigen::Ref<Vector> alpha) {
  activations = (projected.colwise() + query).array().tanh().matrix();
  alpha.noalias() = activations.transpose() * w.score_weight;
  softmax_inplace(alpha);
}

Matrix encode_columns(const LanguageView& v, const Matrix& inputs) {
  Matrix out = v.encoder_weight->as_matrix() * inputs;
  out.colwise() += v.encoder_bias->as_vector();
  return out.array().tanh().matrix();
}

}  // namespace detail

}  // namespace lexipivot
