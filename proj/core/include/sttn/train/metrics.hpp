#pragma once

#include <optional>
#include <span>

#include "sttn/autodiff/tensor.hpp"

namespace sttn::train {

struct Metrics {
  double mae = 0.0;
  std::optional<double> mape_pct;  // empty when every ground truth is ~0
  double rmse = 0.0;
};

// MAPE skips entries with |gt| <= 1e-6; MAE and RMSE use every entry.
Metrics compute_metrics(std::span<const double> predicted, std::span<const double> truth);

// Mean absolute error over all entries; differentiable in `predicted`.
ad::Tensor mae_loss(const ad::Tensor& predicted, const ad::Tensor& truth);

}  // namespace sttn::train
