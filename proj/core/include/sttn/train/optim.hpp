#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "sttn/autodiff/gradcheck.hpp"

namespace sttn::train {

struct RmspropOptions {
  double rho = 0.9;
  double eps = 1e-8;
};

// Per-parameter running mean of squared gradients, same layout as the
// parameter list it was created for.
struct RmspropState {
  std::vector<std::vector<double>> accumulators;
};

// v <- rho v + (1 - rho) g²;  theta <- theta - lr g / (sqrt(v) + eps)
void rmsprop_update(std::span<double> param, std::span<const double> grad,
                    std::span<double> accumulator, double lr, const RmspropOptions& options);

// Applies rmsprop_update to every parameter using its stored gradient.
// Parameters without a gradient are treated as having a zero gradient.
// Throws TrainingError naming the first parameter with a non-finite gradient.
void rmsprop_step(std::span<const ad::NamedTensor> params, RmspropState& state, double lr,
                  const RmspropOptions& options);

// Rescales all gradients so their global L2 norm is at most max_norm.
void clip_gradients(std::span<const ad::NamedTensor> params, double max_norm);

// lr0 * decay^floor(epoch / every)
double lr_schedule(std::size_t epoch, double lr0 = 1e-3, double decay = 0.7,
                   std::size_t every = 5);

}  // namespace sttn::train
