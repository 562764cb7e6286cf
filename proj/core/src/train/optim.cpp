#include "sttn/train/optim.hpp"

#include <cmath>

#include "sttn/errors.hpp"

namespace sttn::train {

void rmsprop_update(std::span<double> param, std::span<const double> grad,
                    std::span<double> accumulator, double lr, const RmspropOptions& options) {
  if (param.size() != grad.size() || param.size() != accumulator.size()) {
    throw DimensionError("rmsprop parameter, gradient and state sizes differ");
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    accumulator[i] = options.rho * accumulator[i] + (1.0 - options.rho) * g * g;
    param[i] -= lr * g / (std::sqrt(accumulator[i]) + options.eps);
  }
}

void rmsprop_step(std::span<const ad::NamedTensor> params, RmspropState& state, double lr,
                  const RmspropOptions& options) {
  if (state.accumulators.empty()) {
    for (const auto& p : params) state.accumulators.emplace_back(p.tensor.numel(), 0.0);
  }
  if (state.accumulators.size() != params.size()) {
    throw ContractError("rmsprop state was built for a different parameter list");
  }
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) {
      if (!std::isfinite(g)) throw TrainingError("non-finite gradient in parameter '" + p.name + "'");
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Tensor t = params[i].tensor;
    if (t.has_grad()) {
      const std::vector<double> g(t.grad().begin(), t.grad().end());
      rmsprop_update(t.mutable_data(), g, state.accumulators[i], lr, options);
    } else {
      const std::vector<double> zero(t.numel(), 0.0);
      rmsprop_update(t.mutable_data(), zero, state.accumulators[i], lr, options);
    }
  }
}

void clip_gradients(std::span<const ad::NamedTensor> params, double max_norm) {
  double ss = 0.0;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    for (double g : p.tensor.grad()) ss += g * g;
  }
  const double norm = std::sqrt(ss);
  if (norm <= max_norm || norm == 0.0) return;
  const double factor = max_norm / norm;
  for (const auto& p : params) {
    if (!p.tensor.has_grad()) continue;
    auto& grad = p.tensor.impl()->grad;
    for (double& g : grad) g *= factor;
  }
}

double lr_schedule(std::size_t epoch, double lr0, double decay, std::size_t every) {
  if (every == 0) throw ConfigError("lr decay interval must be positive");
  return lr0 * std::pow(decay, static_cast<double>(epoch / every));
}

}  // namespace sttn::train
