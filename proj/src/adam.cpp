#include "hma/adam.hpp"

#include <cmath>

namespace hma {

void adam_step(ModelParams& params, AdamState& state) {
  const AdamConfig& cfg = state.cfg_;
  state.step_ += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step_));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step_));
  for (ModelParams::Entry& e : params.entries()) {
    if (!e.trainable) continue;
    if (!e.tensor.has_grad()) {
      throw ContractError("adam_step: missing gradient for parameter " +
                          e.name);
    }
    auto grad = e.tensor.grad_buffer();
    if (e.frozen_pad_row) {
      const std::size_t row_elems = e.tensor.numel() / e.tensor.shape()[0];
      for (std::size_t j = 0; j < row_elems; ++j) grad[j] = 0.0;
    }
    auto& mom = state.moments_[e.name];
    if (mom.m.empty()) {
      mom.m.assign(e.tensor.numel(), 0.0);
      mom.v.assign(e.tensor.numel(), 0.0);
    }
    auto value = e.tensor.mutable_values();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double g = grad[i];
      mom.m[i] = cfg.beta1 * mom.m[i] + (1.0 - cfg.beta1) * g;
      mom.v[i] = cfg.beta2 * mom.v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = mom.m[i] / bc1;
      const double v_hat = mom.v[i] / bc2;
      value[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

}  // namespace hma
