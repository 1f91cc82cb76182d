#include "trseg/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace trseg {

OptimizerState OptimizerState::create(const ModelParams& params, double base_rate,
                                      double momentum, double power,
                                      int64_t total_steps) {
  if (base_rate < 0.0) throw std::invalid_argument("optimizer: negative learning rate");
  OptimizerState s;
  s.base_rate = base_rate;
  s.momentum = momentum;
  s.power = power;
  s.total_steps = total_steps;
  for (const Tensor& t : params.kernels) s.velocity.emplace_back(t.data.size(), 0.0);
  for (const Tensor& t : params.biases) s.velocity.emplace_back(t.data.size(), 0.0);
  return s;
}

double OptimizerState::rate_at(int64_t s) const {
  if (total_steps <= 0) return base_rate;
  const int64_t clamped = s < 0 ? 0 : (s > total_steps ? total_steps : s);
  const double frac = 1.0 - static_cast<double>(clamped) / static_cast<double>(total_steps);
  return base_rate * std::pow(frac, power);
}

void sgd_step(ModelParams& params, OptimizerState& state) {
  if (!params.has_grads())
    throw std::logic_error("sgd_step: missing gradients");
  const double rate = state.current_rate();
  size_t slot = 0;
  auto update = [&](Tensor& t) {
    std::vector<double>& v = state.velocity[slot++];
    for (size_t i = 0; i < t.data.size(); ++i) {
      v[i] = state.momentum * v[i] + t.grad[i];
      t.data[i] -= rate * v[i];
    }
    t.grad.clear();
  };
  for (Tensor& t : params.kernels) update(t);
  for (Tensor& t : params.biases) update(t);
  ++state.step;
}

}  // namespace trseg
