#include "psim/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace psim::nn {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

namespace {

void check_elements(Tensor& value, const Tensor& grad, const std::function<double()>& loss, double h,
                    const std::string& label, GradCheckReport& report) {
  for (Eigen::Index i = 0; i < value.size(); ++i) {
    const double saved = value[i];
    value[i] = saved + h;
    const double up = loss();
    value[i] = saved - h;
    const double down = loss();
    value[i] = saved;
    const double numeric = (up - down) / (2.0 * h);
    const double err = relative_error(grad[i], numeric);
    ++report.checked;
    if (err > report.max_relative_error || report.worst.empty()) {
      report.max_relative_error = std::max(report.max_relative_error, err);
      if (err >= report.max_relative_error) report.worst = label + "[" + std::to_string(i) + "]";
    }
  }
}

}  // namespace

GradCheckReport grad_check(std::span<Param* const> params, const std::function<double()>& loss,
                           const std::function<void()>& analytic, double h) {
  for (Param* p : params) p->zero_grad();
  analytic();
  GradCheckReport report;
  for (Param* p : params) {
    const Tensor grad = p->grad;
    check_elements(p->value, grad, loss, h, p->name, report);
  }
  return report;
}

GradCheckReport grad_check_tensor(Tensor& x, const Tensor& analytic_grad, const std::function<double()>& loss,
                                  double h, const std::string& label) {
  GradCheckReport report;
  check_elements(x, analytic_grad, loss, h, label, report);
  return report;
}

}  // namespace psim::nn
