#include "psim/tensor.hpp"

#include <functional>
#include <numeric>

namespace psim {

std::string to_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)) {
  if (shape_.empty() || shape_.size() > 4) throw ShapeError("tensor rank must be 1-4, got " + to_string(shape_));
  Eigen::Index total = 1;
  for (Eigen::Index d : shape_) {
    if (d < 0) throw ShapeError("negative tensor dimension in " + to_string(shape_));
    total *= d;
  }
  data_ = Eigen::ArrayXd::Constant(total, fill);
}

Eigen::Map<Tensor::RowMatrix> Tensor::sample_matrix(Eigen::Index n) {
  const Eigen::Index plane = shape_[2] * shape_[3];
  return {data_.data() + n * shape_[1] * plane, shape_[1], plane};
}

Eigen::Map<const Tensor::RowMatrix> Tensor::sample_matrix(Eigen::Index n) const {
  const Eigen::Index plane = shape_[2] * shape_[3];
  return {data_.data() + n * shape_[1] * plane, shape_[1], plane};
}

void Tensor::require_rank4(const char* what) const {
  if (shape_.size() != 4) throw ShapeError(std::string(what) + ": expected (N, C, H, W), got " + to_string(shape_));
}

Tensor& Tensor::operator+=(const Tensor& other) {
  if (shape_ != other.shape_) throw ShapeError("tensor add: " + to_string(shape_) + " vs " + to_string(other.shape_));
  data_ += other.data_;
  return *this;
}

double dot(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) throw ShapeError("dot: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  return (a.array() * b.array()).sum();
}

void require_finite(const Tensor& t, int layer_index, const std::string& layer_name) {
  if (!t.all_finite()) {
    throw NumericError("non-finite value produced by layer " + std::to_string(layer_index) + " (" + layer_name + ")");
  }
}

}  // namespace psim
