#pragma once

#include "lexipivot/model/caption_model.hpp"
#include "lexipivot/numerics/lstm.hpp"

namespace lexipivot::detail {

struct AttentionWeights {
  ConstMatrixMap hidden_weight;  // A x H
  ConstMatrixMap region_weight;  // A x D
  ConstVectorMap bias;           // A
  ConstVectorMap score_weight;   // A
};

AttentionWeights attention_weights(const LanguageView& view);
LstmWeightsView lstm_weights(const LanguageView& view);

/// Scores one example's regions against a query (hidden projection + bias).
/// `projected` is region_weight * regions (A x K); writes tanh activations
/// and the normalized weights.
void attention_forward(const AttentionWeights& w, const Eigen::Ref<const Matrix>& projected,
                       const Eigen::Ref<const Vector>& query, Eigen::Ref<Matrix> activations,
                       Eigen::Ref<Vector> alpha);

Matrix encode_columns(const LanguageView& view, const Matrix& inputs);

}  // namespace lexipivot::detail
