#include "lexipivot/numerics/ops.hpp"

#include <cmath>
#include <string>

#include "lexipivot/error.hpp"

namespace lexipivot {

namespace {

void require_matrix(const Tensor& t, const char* name) {
  if (t.rank() != 2) {
    throw ShapeError(std::string("matmul: ") + name + " must be rank 2, got " +
                     shape_to_string(t.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "lhs");
  require_matrix(b, "rhs");
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions disagree for " + shape_to_string(a.shape()) +
                     " x " + shape_to_string(b.shape()));
  }
  Tensor out({a.rows(), b.cols()});
  out.as_matrix().noalias() = a.as_matrix() * b.as_matrix();
  return out;
}

void matmul_backward(Tensor& a, Tensor& b, const Tensor& grad_out) {
  if (grad_out.rank() != 2 || grad_out.rows() != a.rows() || grad_out.cols() != b.cols()) {
    throw ShapeError("matmul_backward: gradient " + shape_to_string(grad_out.shape()) +
                     " does not match product of " + shape_to_string(a.shape()) + " and " +
                     shape_to_string(b.shape()));
  }
  const auto g = grad_out.as_matrix();
  if (a.requires_grad()) a.grad_matrix().noalias() += g * b.as_matrix().transpose();
  if (b.requires_grad()) b.grad_matrix().noalias() += a.as_matrix().transpose() * g;
}

void softmax_inplace(Eigen::Ref<Vector> x) {
  if (x.size() == 0) throw ShapeError("softmax of an empty vector");
  if (!x.allFinite()) throw NumericError("softmax input contains NaN or Inf");
  const double peak = x.maxCoeff();
  x = (x.array() - peak).exp();
  x /= x.sum();
}

void softmax_columns(Eigen::Ref<Matrix> x) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) softmax_inplace(x.col(j));
}

Tensor softmax(const Tensor& x) {
  if (x.rank() != 1) throw ShapeError("softmax expects rank 1, got " + shape_to_string(x.shape()));
  Tensor out({x.size()});
  out.as_vector() = x.as_vector();
  softmax_inplace(out.as_vector());
  return out;
}

double cross_entropy_kernel(const Eigen::Ref<const Vector>& logits, std::size_t target_index,
                            Eigen::Ref<Vector> grad) {
  const auto n = static_cast<std::size_t>(logits.size());
  if (target_index >= n) {
    throw BoundsError("cross_entropy target " + std::to_string(target_index) +
                      " outside vocabulary of " + std::to_string(n));
  }
  if (!logits.allFinite()) throw NumericError("cross_entropy logits contain NaN or Inf");
  const double peak = logits.maxCoeff();
  grad = (logits.array() - peak).exp();
  const double sum = grad.sum();
  const double loss = std::log(sum) - (logits[static_cast<Eigen::Index>(target_index)] - peak);
  grad /= sum;
  grad[static_cast<Eigen::Index>(target_index)] -= 1.0;
  return loss;
}

double cross_entropy(Tensor& logits, std::size_t target_index) {
  if (logits.rank() != 1) {
    throw ShapeError("cross_entropy expects rank 1 logits, got " + shape_to_string(logits.shape()));
  }
  Vector grad(static_cast<Eigen::Index>(logits.size()));
  const double loss = cross_entropy_kernel(logits.as_vector(), target_index, grad);
  if (logits.requires_grad()) logits.grad_vector() += grad;
  return loss;
}

}  // namespace lexipivot
