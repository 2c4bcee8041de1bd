#include "lexipivot/numerics/tensor.hpp"

#include <numeric>
#include <sstream>

#include "lexipivot/error.hpp"

namespace lexipivot {

std::string shape_to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_size(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         [](std::size_t a, std::size_t b) { return a * b; });
}

Tensor::Tensor(Shape shape, bool requires_grad)
    : shape_(std::move(shape)), data_(shape_size(shape_), 0.0), requires_grad_(requires_grad) {}

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : shape_(std::move(shape)), data_(std::move(data)), requires_grad_(requires_grad) {
  if (shape_size(shape_) != data_.size()) {
    throw ShapeError("tensor shape " + shape_to_string(shape_) + " needs " +
                     std::to_string(shape_size(shape_)) + " values, got " +
                     std::to_string(data_.size()));
  }
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows,
                      bool requires_grad) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows.begin()->size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Tensor({r, c}, std::move(data), requires_grad);
}

Tensor Tensor::vector(std::initializer_list<double> values, bool requires_grad) {
  return Tensor({values.size()}, std::vector<double>(values), requires_grad);
}

Tensor Tensor::vector(const Vector& values, bool requires_grad) {
  return Tensor({static_cast<std::size_t>(values.size())},
                std::vector<double>(values.data(), values.data() + values.size()),
                requires_grad);
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for " +
                     shape_to_string(shape_));
  }
  return shape_[axis];
}

std::size_t Tensor::rows() const {
  if (rank() == 1) return shape_[0];
  if (rank() != 2) throw ShapeError("expected rank <= 2, got " + shape_to_string(shape_));
  return shape_[0];
}

std::size_t Tensor::cols() const {
  if (rank() == 1) return 1;
  if (rank() != 2) throw ShapeError("expected rank <= 2, got " + shape_to_string(shape_));
  return shape_[1];
}

double Tensor::at(std::size_t row, std::size_t col) const {
  if (row >= rows() || col >= cols()) {
    throw BoundsError("index (" + std::to_string(row) + "," + std::to_string(col) +
                      ") outside " + shape_to_string(shape_));
  }
  return data_[row * cols() + col];
}

std::span<double> Tensor::grad() {
  if (!grad_) grad_.emplace(data_.size(), 0.0);
  return *grad_;
}

std::span<const double> Tensor::grad() const {
  if (!grad_) throw StateError("tensor " + shape_to_string(shape_) + " has no gradient");
  return *grad_;
}

void Tensor::zero_grad() {
  if (grad_) {
    std::fill(grad_->begin(), grad_->end(), 0.0);
  } else {
    grad_.emplace(data_.size(), 0.0);
  }
}

MatrixMap Tensor::as_matrix() {
  return MatrixMap(data_.data(), static_cast<Eigen::Index>(rows()),
                   static_cast<Eigen::Index>(cols()));
}

ConstMatrixMap Tensor::as_matrix() const {
  return ConstMatrixMap(data_.data(), static_cast<Eigen::Index>(rows()),
                        static_cast<Eigen::Index>(cols()));
}

MatrixMap Tensor::grad_matrix() {
  auto g = grad();
  return MatrixMap(g.data(), static_cast<Eigen::Index>(rows()),
                   static_cast<Eigen::Index>(cols()));
}

VectorMap Tensor::as_vector() noexcept {
  return VectorMap(data_.data(), static_cast<Eigen::Index>(data_.size()));
}

ConstVectorMap Tensor::as_vector() const noexcept {
  return ConstVectorMap(data_.data(), static_cast<Eigen::Index>(data_.size()));
}

VectorMap Tensor::grad_vector() {
  auto g = grad();
  return VectorMap(g.data(), static_cast<Eigen::Index>(g.size()));
}

}  // namespace lexipivot
