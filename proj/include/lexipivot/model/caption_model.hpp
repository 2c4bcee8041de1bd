#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "lexipivot/corpus/types.hpp"
#include "lexipivot/numerics/eigen.hpp"
#include "lexipivot/numerics/param_store.hpp"

namespace lexipivot {

enum class ContextMode {
  attention,  // c_t = sum_k alpha_tk a_k with alpha from f_a(h_{t-1}, a_k)
  mean_pool,  // c_t = mean_k a_k at every step
};

struct ModelDims {
  std::size_t input_dim = 32;   // raw region feature size
  std::size_t embed_dim = 64;   // D
  std::size_t hidden_dim = 64;  // H, must equal D (tied output projection)
  std::size_t attention_dim = 32;
  std::size_t regions = 9;      // K
};

struct ModelConfig {
  ModelDims dims;
  ContextMode context = ContextMode::attention;
  bool freeze_encoder = false;
  std::size_t max_len = 16;

  /// Throws ConfigError.
  void validate() const;
};

struct LanguageSpec {
  std::string id;
  std::size_t vocab_size = 0;
};

/// Encoded regions a_1..a_K, one per column (D x K).
struct EncodedImage {
  Matrix regions;

  Eigen::Index count() const noexcept { return regions.cols(); }
  Vector mean() const { return regions.rowwise().mean(); }
};

struct AttentionResult {
  Vector context;  // D
  Vector weights;  // K
};

struct DecodeState {
  Vector h;
  Vector c;
  std::size_t t = 0;
  TokenSeq emitted;  // tokens fed so far
};

struct StepResult {
  Vector logits;
  DecodeState state;
  AttentionResult attention;
};

/// Parameter tensors seen by one language. Shared parts point at the same
/// storage for every language.
struct LanguageView {
  const Tensor* encoder_weight = nullptr;
  const Tensor* encoder_bias = nullptr;
  const Tensor* embedding = nullptr;
  const Tensor* output_projection = nullptr;
  const Tensor* lstm_input_weight = nullptr;
  const Tensor* lstm_hidden_weight = nullptr;
  const Tensor* lstm_bias = nullptr;
  const Tensor* attention_hidden_weight = nullptr;  // null for mean pooling
  const Tensor* attention_region_weight = nullptr;
  const Tensor* attention_bias = nullptr;
  const Tensor* attention_score_weight = nullptr;
};

/// Shared encoder + decoder with one tied embedding matrix per language.
class MultiLingualModel {
 public:
  MultiLingualModel(ModelConfig config, std::vector<LanguageSpec> languages, std::uint64_t seed);

  /// Wraps loaded parameters; names and shapes must match the config.
  static MultiLingualModel from_params(ModelConfig config, std::vector<LanguageSpec> languages,
                                       ParamStore params);

  const ModelConfig& config() const noexcept { return config_; }
  const std::vector<LanguageSpec>& languages() const noexcept { return languages_; }
  bool has_language(const std::string& id) const noexcept;
  /// Throws LookupError for an unregistered language.
  std::size_t vocab_size(const std::string& id) const;

  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  LanguageView view(const std::string& language) const;

  static std::string embedding_name(const std::string& language) { return "embedding." + language; }

  /// Per-region affine map followed by tanh.
  EncodedImage encode(const SpatialImage& image) const;
  AttentionResult attend(const Vector& h_prev, const EncodedImage& regions) const;
  DecodeState initial_state() const;
  StepResult decode_step(const std::string& language, const DecodeState& state, int prev_token,
                         const EncodedImage& regions) const;

  /// Marks shared parameters and the given languages' embeddings trainable;
  /// other embeddings (and the encoder when frozen) are not.
  void set_trainable(std::span<const std::string> languages);
  void set_all_trainable();

 private:
  MultiLingualModel() = default;
  void check_layout() const;
  const LanguageSpec& spec(const std::string& id) const;

  ModelConfig config_;
  std::vector<LanguageSpec> languages_;
  ParamStore params_;
};

/// Same pipeline with the attention network removed.
MultiLingualModel mean_pool_variant(ModelConfig config, std::vector<LanguageSpec> languages,
                                    std::uint64_t seed);

namespace param_names {
inline constexpr const char* kEncoderWeight = "encoder.weight";
inline constexpr const char* kEncoderBias = "encoder.bias";
inline constexpr const char* kLstmInputWeight = "decoder.lstm.input_weight";
inline constexpr const char* kLstmHiddenWeight = "decoder.lstm.hidden_weight";
inline constexpr const char* kLstmBias = "decoder.lstm.bias";
inline constexpr const char* kAttentionHidden = "decoder.attention.hidden_weight";
inline constexpr const char* kAttentionRegion = "decoder.attention.region_weight";
inline constexpr const char* kAttentionBias = "decoder.attention.bias";
inline constexpr const char* kAttentionScore = "decoder.attention.score_weight";
}  // namespace param_names

}  // namespace lexipivot
