#include <algorithm>
#include <cmath>
#include <map>
#include <optional>

#include "kernels.hpp"
#include "lexipivot/error.hpp"
#include "lexipivot/corpus/vocabulary.hpp"
#include "lexipivot/model/sequence_loss.hpp"
#include "lexipivot/numerics/ops.hpp"

namespace lexipivot {

namespace {

using Index = Eigen::Index;

/// Teacher-forced unroll of one mono-lingual batch. Example b owns region
/// columns [b*K, (b+1)*K).
class Unroll {
 public:
  Unroll(const MultiLingualModel& model, const std::string& language, std::vector<const TokenSeq*> tokens)
      : model_(model), language_(language), view_(model.view(language)), tokens_(std::move(tokens)) {
    const auto N = static_cast<int>(model.vocab_size(language));
    steps_ = 0;
    for (const auto* seq : tokens_) {
      if (seq->size() < 2) throw InputError("caption needs at least a begin and an end token");
      if (seq->size() > model.config().max_len) {
        throw InputError("caption of " + std::to_string(seq->size()) + " tokens exceeds the unroll limit of " +
                         std::to_string(model.config().max_len));
      }
      for (int tok : *seq) {
        if (tok < 0 || tok >= N) {
          throw BoundsError("token " + std::to_string(tok) + " outside vocabulary of " + std::to_string(N));
        }
      }
      steps_ = std::max(steps_, seq->size() - 1);
    }
  }

  void set_images(std::span<const SpatialImage* const> images) {
    const auto& d = model_.config().dims;
    const auto K = static_cast<Index>(d.regions);
    const auto I = static_cast<Index>(d.input_dim);
    regions_per_example_ = K;
    inputs_.resize(I, K * static_cast<Index>(images.size()));
    for (std::size_t b = 0; b < images.size(); ++b) {
      const auto* image = images[b];
      if (!image) throw InputError("training example without an image");
      if (image->regions != d.regions || image->dim != d.input_dim) {
        throw ShapeError("image " + std::to_string(image->image_id) + " is " + std::to_string(image->regions) +
                         "x" + std::to_string(image->dim) + ", model expects " + std::to_string(d.regions) +
                         "x" + std::to_string(d.input_dim));
      }
      for (Index k = 0; k < K; ++k) {
        for (Index j = 0; j < I; ++j) {
          inputs_(j, static_cast<Index>(b) * K + k) = image->data[static_cast<std::size_t>(k * I + j)];
        }
      }
    }
    regions_ = detail::encode_columns(view_, inputs_);
    has_inputs_ = true;
  }

  void set_regions(std::span<const EncodedImage> regions) {
    if (regions.empty()) throw ShapeError("no regions");
    const Index K = regions.front().count();
    if (K == 0) throw ShapeError("attention over zero regions");
    regions_per_example_ = K;
    regions_.resize(static_cast<Index>(model_.config().dims.embed_dim), K * static_cast<Index>(regions.size()));
    for (std::size_t b = 0; b < regions.size(); ++b) {
      if (regions[b].count() != K || regions[b].regions.rows() != regions_.rows()) {
        throw ShapeError("all examples in a trace must share one region layout");
      }
      regions_.middleCols(static_cast<Index>(b) * K, K) = regions[b].regions;
    }
    has_inputs_ = false;
  }

  void forward() {
    const auto B = static_cast<Index>(tokens_.size());
    const auto D = static_cast<Index>(model_.config().dims.embed_dim);
    const auto H = static_cast<Index>(model_.config().dims.hidden_dim);
    const Index K = regions_per_example_;
    const bool attention = model_.config().context == ContextMode::attention;
    const auto embedding = view_.embedding->as_matrix();
    const auto lstm = detail::lstm_weights(view_);

    steps_cache_.assign(steps_, StepCache{});
    nll_sum_ = 0.0;
    token_count_ = 0;

    Matrix mean_context;
    if (attention) {
      const auto aw = detail::attention_weights(view_);
      projected_.noalias() = aw.region_weight * regions_;
    } else {
      mean_context.resize(D, B);
      for (Index b = 0; b < B; ++b) mean_context.col(b) = regions_.middleCols(b * K, K).rowwise().mean();
    }

    Matrix h = Matrix::Zero(H, B), c = Matrix::Zero(H, B);
    for (std::size_t t = 0; t < steps_; ++t) {
      StepCache& sc = steps_cache_[t];
      sc.alpha.resize(K, B);
      if (attention) {
        const auto aw = detail::attention_weights(view_);
        Matrix query = aw.hidden_weight * h;
        query.colwise() += aw.bias;
        sc.activations.resize(projected_.rows(), K * B);
        sc.context.resize(D, B);
        for (Index b = 0; b < B; ++b) {
          detail::attention_forward(aw, projected_.middleCols(b * K, K), query.col(b),
                                    sc.activations.middleCols(b * K, K), sc.alpha.col(b));
          sc.context.col(b).noalias() = regions_.middleCols(b * K, K) * sc.alpha.col(b);
        }
      } else {
        sc.alpha.setConstant(1.0 / static_cast<double>(K));
        sc.context = mean_context;
      }

      Matrix x(2 * D, B);
      for (Index b = 0; b < B; ++b) x.col(b).head(D) = embedding.col(token(b, t));
      x.bottomRows(D) = sc.context;
      lstm_forward(lstm, x, h, c, sc.lstm);
      h = sc.lstm.h;
      c = sc.lstm.c;

      const Matrix logits = embedding.transpose() * h;
      sc.dlogits.resize(logits.rows(), B);
      sc.gold.assign(static_cast<std::size_t>(B), 0.0);
      for (Index b = 0; b < B; ++b) {
        if (t + 1 >= tokens_[static_cast<std::size_t>(b)]->size()) {
          sc.dlogits.col(b).setZero();
          continue;
        }
        const int target = token(b, t + 1);
        const double loss = cross_entropy_kernel(logits.col(b), static_cast<std::size_t>(target), sc.dlogits.col(b));
        sc.gold[static_cast<std::size_t>(b)] = std::exp(-loss);
        nll_sum_ += loss;
        ++token_count_;
      }
    }
  }

  /// Gradients of scale * nll_sum into trainable parameters.
  void backward(MultiLingualModel& model, double scale) {
    const auto B = static_cast<Index>(tokens_.size());
    const auto D = static_cast<Index>(model_.config().dims.embed_dim);
    const auto H = static_cast<Index>(model_.config().dims.hidden_dim);
    const Index K = regions_per_example_;
    const bool attention = model_.config().context == ContextMode::attention;
    const auto embedding = view_.embedding->as_matrix();
    const auto lstm = detail::lstm_weights(view_);

    Matrix d_embedding = Matrix::Zero(embedding.rows(), embedding.cols());
    RowMatrix g_in = RowMatrix::Zero(lstm.input_weight.rows(), lstm.input_weight.cols());
    RowMatrix g_hid = RowMatrix::Zero(lstm.hidden_weight.rows(), lstm.hidden_weight.cols());
    Vector d_lstm_bias = Vector::Zero(lstm.bias.size());
    LstmGradsView lstm_grads{MatrixMap(g_in.data(), g_in.rows(), g_in.cols()),
                             MatrixMap(g_hid.data(), g_hid.rows(), g_hid.cols()),
                             VectorMap(d_lstm_bias.data(), d_lstm_bias.size())};

    Matrix d_regions = Matrix::Zero(regions_.rows(), regions_.cols());
    Matrix d_projected;
    Matrix d_att_hidden, d_att_region;
    Vector d_att_bias, d_att_score;
    std::optional<detail::AttentionWeights> aw;
    if (attention) {
      aw.emplace(detail::attention_weights(view_));
      d_projected = Matrix::Zero(projected_.rows(), projected_.cols());
      d_att_hidden = Matrix::Zero(aw->hidden_weight.rows(), aw->hidden_weight.cols());
      d_att_bias = Vector::Zero(aw->bias.size());
      d_att_score = Vector::Zero(aw->score_weight.size());
    }

    Matrix dh_next = Matrix::Zero(H, B), dc_next = Matrix::Zero(H, B);
    Matrix dx, dh_prev, dc_prev;
    for (std::size_t step = steps_; step-- > 0;) {
      const StepCache& sc = steps_cache_[step];
      const Matrix g = scale * sc.dlogits;
      d_embedding.noalias() += sc.lstm.h * g.transpose();
      Matrix dh = dh_next;
      dh.noalias() += embedding * g;
      lstm_backward(lstm, sc.lstm, dh, dc_next, &lstm_grads, &dx, dh_prev, dc_prev);
      for (Index b = 0; b < B; ++b) d_embedding.col(token(b, step)) += dx.col(b).head(D);
      const auto d_context = dx.bottomRows(D);

      if (attention) {
        Matrix d_query(projected_.rows(), B);
        for (Index b = 0; b < B; ++b) {
          const auto region = regions_.middleCols(b * K, K);
          const auto alpha = sc.alpha.col(b);
          d_regions.middleCols(b * K, K).noalias() += d_context.col(b) * alpha.transpose();
          const Vector d_alpha = region.transpose() * d_context.col(b);
          const Vector d_score = (alpha.array() * (d_alpha.array() - alpha.dot(d_alpha))).matrix();
          const auto act = sc.activations.middleCols(b * K, K);
          d_att_score.noalias() += act * d_score;
          const Matrix d_pre = ((aw->score_weight * d_score.transpose()).array() * (1.0 - act.array().square())).matrix();
          d_projected.middleCols(b * K, K) += d_pre;
          d_query.col(b) = d_pre.rowwise().sum();
        }
        d_att_hidden.noalias() += d_query * sc.lstm.h_prev.transpose();
        d_att_bias += d_query.rowwise().sum();
        dh_prev.noalias() += aw->hidden_weight.transpose() * d_query;
      } else {
        for (Index b = 0; b < B; ++b) {
          d_regions.middleCols(b * K, K).colwise() += d_context.col(b) / static_cast<double>(K);
        }
      }
      dh_next = dh_prev;
      dc_next = dc_prev;
    }

    if (attention) {
      d_att_region = d_projected * regions_.transpose();
      d_regions.noalias() += aw->region_weight.transpose() * d_projected;
    }

    auto& params = model.params();
    auto accumulate = [&](const std::string& name, const auto& delta) {
      Tensor& t = params.get(name);
      if (!t.requires_grad()) return;
      auto g = t.grad_matrix();
      g += delta;
    };
    namespace pn = param_names;
    accumulate(MultiLingualModel::embedding_name(language_), d_embedding);
    accumulate(pn::kLstmInputWeight, g_in);
    accumulate(pn::kLstmHiddenWeight, g_hid);
    accumulate(pn::kLstmBias, d_lstm_bias);
    if (attention) {
      accumulate(pn::kAttentionHidden, d_att_hidden);
      accumulate(pn::kAttentionRegion, d_att_region);
      accumulate(pn::kAttentionBias, d_att_bias);
      accumulate(pn::kAttentionScore, d_att_score);
    }
    if (has_inputs_) {
      const Matrix d_pre = (d_regions.array() * (1.0 - regions_.array().square())).matrix();
      accumulate(pn::kEncoderWeight, Matrix(d_pre * inputs_.transpose()));
      accumulate(pn::kEncoderBias, Vector(d_pre.rowwise().sum()));
    }
  }

  TeacherForcedTrace trace() const {
    const std::size_t B = tokens_.size();
    TeacherForcedTrace out;
    out.gold_probability.resize(B);
    out.attention.resize(B);
    out.context.resize(B);
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t n = tokens_[b]->size() - 1;
      for (std::size_t t = 0; t < n; ++t) {
        const auto& sc = steps_cache_[t];
        out.gold_probability[b].push_back(sc.gold[b]);
        out.attention[b].push_back(sc.alpha.col(static_cast<Index>(b)));
        out.context[b].push_back(sc.context.col(static_cast<Index>(b)));
      }
    }
    return out;
  }

  double nll_sum() const noexcept { return nll_sum_; }
  std::size_t token_count() const noexcept { return token_count_; }

 private:
  struct StepCache {
    Matrix activations;  // A x (B*K)
    Matrix alpha;        // K x B
    Matrix context;      // D x B
    LstmCache lstm;
    Matrix dlogits;      // N x B, softmax - one_hot (zero when padded)
    std::vector<double> gold;
  };

  // Finished captions are fed pad; their steps carry no loss, so no gradient.
  int token(Index b, std::size_t t) const {
    const auto& seq = *tokens_[static_cast<std::size_t>(b)];
    return t < seq.size() ? seq[t] : Vocabulary::kPad;
  }

  const MultiLingualModel& model_;
  std::string language_;
  LanguageView view_;
  std::vector<const TokenSeq*> tokens_;
  std::size_t steps_ = 0;
  Index regions_per_example_ = 0;
  Matrix inputs_;
  Matrix regions_;
  Matrix projected_;
  bool has_inputs_ = false;
  std::vector<StepCache> steps_cache_;
  double nll_sum_ = 0.0;
  std::size_t token_count_ = 0;
};

std::map<std::string, std::vector<const TrainingExample*>> group_by_language(
    const MultiLingualModel& model, std::span<const TrainingExample> batch) {
  if (batch.empty()) throw InputError("empty batch");
  std::map<std::string, std::vector<const TrainingExample*>> groups;
  for (const auto& ex : batch) {
    model.vocab_size(ex.language);
    groups[ex.language].push_back(&ex);
  }
  return groups;
}

Unroll make_unroll(const MultiLingualModel& model, const std::string& language,
                   const std::vector<const TrainingExample*>& examples) {
  std::vector<const TokenSeq*> tokens;
  std::vector<const SpatialImage*> images;
  for (const auto* ex : examples) {
    tokens.push_back(&ex->tokens);
    images.push_back(ex->image);
  }
  Unroll unroll(model, language, std::move(tokens));
  unroll.set_images(images);
  unroll.forward();
  return unroll;
}

}  // namespace

LossResult sequence_loss(const MultiLingualModel& model, std::span<const TrainingExample> batch) {
  LossResult out;
  for (const auto& [lang, examples] : group_by_language(model, batch)) {
    const auto unroll = make_unroll(model, lang, examples);
    out.nll_sum += unroll.nll_sum();
    out.token_count += unroll.token_count();
  }
  return out;
}

LossResult sequence_loss_backward(MultiLingualModel& model, std::span<const TrainingExample> batch) {
  std::vector<std::pair<std::string, Unroll>> unrolls;
  LossResult out;
  for (const auto& [lang, examples] : group_by_language(model, batch)) {
    auto unroll = make_unroll(model, lang, examples);
    out.nll_sum += unroll.nll_sum();
    out.token_count += unroll.token_count();
    unrolls.emplace_back(lang, std::move(unroll));
  }
  if (out.token_count == 0) return out;
  const double scale = 1.0 / static_cast<double>(out.token_count);
  for (auto& [_, unroll] : unrolls) unroll.backward(model, scale);
  return out;
}

TeacherForcedTrace trace_teacher_forced(const MultiLingualModel& model, const std::string& language,
                                        std::span<const EncodedImage> regions,
                                        std::span<const TokenSeq> tokens) {
  if (regions.size() != tokens.size()) throw InputError("trace needs one region set per caption");
  std::vector<const TokenSeq*> ptrs;
  for (const auto& t : tokens) ptrs.push_back(&t);
  Unroll unroll(model, language, std::move(ptrs));
  unroll.set_regions(regions);
  unroll.forward();
  return unroll.trace();
}

}  // namespace lexipivot
