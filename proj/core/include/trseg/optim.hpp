#pragma once

#include "trseg/nn.hpp"

namespace trseg {

// SGD with heavy-ball momentum under a polynomial decay schedule:
// rate(step) = base_rate * (1 - step/total_steps)^power.
struct OptimizerState {
  double base_rate = 0.1;
  double momentum = 0.9;
  double power = 0.9;
  int64_t step = 0;
  int64_t total_steps = 0;
  // velocity buffers, kernels first then biases, parallel to ModelParams
  std::vector<std::vector<double>> velocity;

  static OptimizerState create(const ModelParams& params, double base_rate,
                               double momentum, double power, int64_t total_steps);

  double rate_at(int64_t s) const;
  double current_rate() const { return rate_at(step); }
};

// v <- momentum * v + grad; w <- w - rate(step) * v. Clears grads and
// increments the step counter. Throws if any parameter has no gradient.
void sgd_step(ModelParams& params, OptimizerState& state);

}  // namespace trseg
