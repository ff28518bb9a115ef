#pragma once

#include <concepts>
#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>

#include "psim/error.hpp"

namespace psim {

/// Row-major 2D scalar grid; rows() is the image height, cols() the width.
template <typename Scalar>
using GridT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Image = GridT<double>;

/// Phase in radians. When wrapped, every value lies in (-pi, pi].
struct PhaseMap {
  Image values;
  bool wrapped = false;
};

/// Per-pixel fringe modulation amplitude, intensity units, >= 0.
struct QualityMap {
  Image amplitude;
};

struct HeightMap {
  Image nm;
  double lambda0_nm = 0.0;
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Maps an angle into (-pi, pi].
template <std::floating_point Scalar>
Scalar wrap_to_pi(Scalar x) {
  Scalar r = std::remainder(x, Scalar(kTwoPi));
  if (r <= -Scalar(kPi)) r += Scalar(kTwoPi);
  return r;
}

template <typename Derived>
GridT<typename Derived::Scalar> wrap_to_pi(const Eigen::ArrayBase<Derived>& a) {
  return a.unaryExpr([](typename Derived::Scalar x) { return wrap_to_pi(x); });
}

template <typename A, typename B>
bool same_shape(const Eigen::ArrayBase<A>& a, const Eigen::ArrayBase<B>& b) {
  return a.rows() == b.rows() && a.cols() == b.cols();
}

template <typename A, typename B>
void require_same_shape(const Eigen::ArrayBase<A>& a, const Eigen::ArrayBase<B>& b,
                        const char* what) {
  if (!same_shape(a, b)) {
    throw ShapeError(std::string(what) + ": dimension mismatch (" + std::to_string(a.cols()) + "x" +
                     std::to_string(a.rows()) + " vs " + std::to_string(b.cols()) + "x" +
                     std::to_string(b.rows()) + ")");
  }
}

template <typename Derived>
bool all_finite(const Eigen::ArrayBase<Derived>& a) {
  return a.isFinite().all();
}

}  // namespace psim
