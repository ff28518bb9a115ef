#pragma once

#include <functional>
#include <span>
#include <string>

#include "psim/layers.hpp"

namespace psim::nn {

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst;  // "<param>[<index>]"
  std::size_t checked = 0;
};

/// |analytic - numeric| / max(|analytic|, |numeric|, 1e-8)
double relative_error(double analytic, double numeric);

/// Central differences over every element of every parameter.
/// `loss` evaluates the scalar loss at the current parameter values;
/// `analytic` must leave d(loss)/d(param) in each Param::grad.
GradCheckReport grad_check(std::span<Param* const> params, const std::function<double()>& loss,
                           const std::function<void()>& analytic, double h = 1e-6);

/// Same check for a free tensor (typically the network input).
GradCheckReport grad_check_tensor(Tensor& x, const Tensor& analytic_grad, const std::function<double()>& loss,
                                  double h = 1e-6, const std::string& label = "input");

}  // namespace psim::nn
