#pragma once

#include <Eigen/Dense>

#include <initializer_list>
#include <string>
#include <vector>

#include "psim/error.hpp"

namespace psim {

using Shape = std::vector<Eigen::Index>;

std::string to_string(const Shape& shape);

/// Dense row-major float64 array of rank 1-4. Rank-4 tensors are laid out as
/// (batch, channels, height, width).
class Tensor {
 public:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(std::initializer_list<Eigen::Index> shape) : Tensor(Shape(shape)) {}

  static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape()); }

  const Shape& shape() const { return shape_; }
  Eigen::Index rank() const { return static_cast<Eigen::Index>(shape_.size()); }
  Eigen::Index dim(int axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  Eigen::Index size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  Eigen::ArrayXd& array() { return data_; }
  const Eigen::ArrayXd& array() const { return data_; }

  double& operator[](Eigen::Index i) { return data_(i); }
  double operator[](Eigen::Index i) const { return data_(i); }

  // rank-4 accessors
  Eigen::Index n() const { return shape_[0]; }
  Eigen::Index c() const { return shape_[1]; }
  Eigen::Index h() const { return shape_[2]; }
  Eigen::Index w() const { return shape_[3]; }
  double& at(Eigen::Index n, Eigen::Index c, Eigen::Index y, Eigen::Index x) {
    return data_(((n * shape_[1] + c) * shape_[2] + y) * shape_[3] + x);
  }
  double at(Eigen::Index n, Eigen::Index c, Eigen::Index y, Eigen::Index x) const {
    return data_(((n * shape_[1] + c) * shape_[2] + y) * shape_[3] + x);
  }

  /// Sample n of a rank-4 tensor viewed as a (channels, height * width) matrix.
  Eigen::Map<RowMatrix> sample_matrix(Eigen::Index n);
  Eigen::Map<const RowMatrix> sample_matrix(Eigen::Index n) const;

  void fill(double v) { data_.setConstant(v); }
  bool all_finite() const { return data_.isFinite().all(); }
  void require_rank4(const char* what) const;

  Tensor& operator+=(const Tensor& other);
  Tensor& operator*=(double s) {
    data_ *= s;
    return *this;
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && (a.data_.size() == 0 || (a.data_ == b.data_).all());
  }

 private:
  Shape shape_;
  Eigen::ArrayXd data_;
};

inline Tensor operator*(double s, Tensor t) {
  t *= s;
  return t;
}

/// Inner product of equally shaped tensors.
double dot(const Tensor& a, const Tensor& b);

/// Throws NumericError naming the layer when t holds NaN or Inf.
void require_finite(const Tensor& t, int layer_index, const std::string& layer_name);

}  // namespace psim
