#include "psim/adam.hpp"

#include <cmath>

namespace psim::nn {

AdamState make_adam_state(std::span<Param* const> params, const AdamConfig& config) {
  AdamState s;
  s.config = config;
  for (const Param* p : params) {
    s.m.emplace_back(p->value.shape());
    s.v.emplace_back(p->value.shape());
  }
  return s;
}

void adam_step(std::span<Param* const> params, AdamState& state) {
  if (params.size() != state.m.size()) throw ShapeError("adam_step: parameter count does not match state");
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Param& p = *params[i];
    if (p.grad.shape() != p.value.shape() || state.m[i].shape() != p.value.shape()) {
      throw ShapeError("adam_step: shape mismatch for " + p.name);
    }
    auto& m = state.m[i].array();
    auto& v = state.v[i].array();
    const auto& g = p.grad.array();
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.square();
    p.value.array() -= c.lr * (m / correction1) / ((v / correction2).sqrt() + c.eps);
  }
}

}  // namespace psim::nn
