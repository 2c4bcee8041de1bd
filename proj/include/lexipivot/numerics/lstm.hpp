#pragma once

#include "lexipivot/numerics/eigen.hpp"
#include "lexipivot/numerics/tensor.hpp"

namespace lexipivot {

// LSTM cell with gate rows stacked as [input; forget; candidate; output].
// Batched kernels keep one example per column.

struct LstmWeightsView {
  ConstMatrixMap input_weight;   // 4H x I
  ConstMatrixMap hidden_weight;  // 4H x H
  ConstVectorMap bias;           // 4H

  Eigen::Index hidden_size() const noexcept { return hidden_weight.cols(); }
  Eigen::Index input_size() const noexcept { return input_weight.cols(); }
};

struct LstmGradsView {
  MatrixMap input_weight;
  MatrixMap hidden_weight;
  VectorMap bias;
};

struct LstmCache {
  Matrix input;   // I x B
  Matrix h_prev;  // H x B
  Matrix c_prev;
  Matrix gates;   // 4H x B, post-nonlinearity
  Matrix c;
  Matrix tanh_c;
  Matrix h;
};

void lstm_forward(const LstmWeightsView& w, const Matrix& input, const Matrix& h_prev,
                  const Matrix& c_prev, LstmCache& cache);

/// Backpropagates dh/dc of the step outputs. Weight gradients accumulate into
/// `grads` when non-null; d_input may be null.
void lstm_backward(const LstmWeightsView& w, const LstmCache& cache, const Matrix& dh,
                   const Matrix& dc, LstmGradsView* grads, Matrix* d_input, Matrix& dh_prev,
                   Matrix& dc_prev);

// Tensor-level single step.

struct LstmParams {
  Tensor* input_weight;
  Tensor* hidden_weight;
  Tensor* bias;
};

struct LstmState {
  Tensor h;
  Tensor c;
};

LstmState lstm_step(const Tensor& input, const LstmState& state, const LstmParams& weights,
                    LstmCache* cache = nullptr);

void lstm_step_backward(Tensor& input, LstmState& state, const LstmParams& weights,
                        const LstmCache& cache, const Tensor& grad_h, const Tensor& grad_c);

LstmWeightsView lstm_view(const LstmParams& p);

}  // namespace lexipivot
