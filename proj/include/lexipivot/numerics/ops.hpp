#pragma once

#include <cstddef>

#include "lexipivot/numerics/eigen.hpp"
#include "lexipivot/numerics/tensor.hpp"

namespace lexipivot {

// Tensor-level operations. Backward passes accumulate into the `grad` of each
// input that has requires_grad set.

Tensor matmul(const Tensor& a, const Tensor& b);
void matmul_backward(Tensor& a, Tensor& b, const Tensor& grad_out);

Tensor softmax(const Tensor& x);

/// -log softmax(logits)[target]; gradient softmax - one_hot goes to logits.grad.
double cross_entropy(Tensor& logits, std::size_t target_index);

// Kernels shared with the caption model.

/// Numerically stable softmax in place; throws NumericError on non-finite input.
void softmax_inplace(Eigen::Ref<Vector> x);

/// Column-wise softmax of a (classes x batch) matrix.
void softmax_columns(Eigen::Ref<Matrix> x);

/// Returns the loss and writes softmax - one_hot into grad (same length as logits).
double cross_entropy_kernel(const Eigen::Ref<const Vector>& logits, std::size_t target_index,
                            Eigen::Ref<Vector> grad);

inline double sigmoid(double x) noexcept {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace lexipivot
