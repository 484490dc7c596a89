#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "hma/params.hpp"

namespace hma {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Per-parameter first/second-moment buffers plus the shared step counter.
/// Moments start at zero; the counter increases by exactly 1 per update.
class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

  const AdamConfig& config() const { return cfg_; }
  long step_count() const { return step_; }

 private:
  struct Moments {
    std::vector<double> m, v;
  };
  AdamConfig cfg_;
  long step_ = 0;
  std::unordered_map<std::string, Moments> moments_;
  friend void adam_step(ModelParams& params, AdamState& state);
};

/// One Adam update with bias correction over every trainable parameter.
/// ContractError naming the parameter when its gradient is absent.
void adam_step(ModelParams& params, AdamState& state);

}  // namespace hma
